use std::collections::HashSet;

use crate::geo::{PoiId, UserId};

use super::stream::PartialScoreStream;
use super::QueryContext;

/// The `k` best POIs for `u` with positive score, best first, ties by id.
pub fn topk_gsk(ctx: &QueryContext<'_>, u: UserId, k: usize) -> Vec<(PoiId, f64)> {
    if k == 0 {
        return Vec::new();
    }
    let scorer = ctx.scorer();
    let social = ctx.ds.socially_relevant_pois(u);
    let mut out: Vec<(PoiId, f64)> = social.iter().map(|&p| (p, scorer.score(u, p))).collect();
    let social: HashSet<PoiId> = social.into_iter().collect();
    let weights = ctx.index.terms.user_terms(u).to_vec();
    if !weights.is_empty() {
        let stream = PartialScoreStream::new(ctx, ctx.ds.users[u as usize].loc, weights);
        out.extend(
            stream
                .filter(|h| !social.contains(&h.poi))
                .take(k)
                .map(|h| (h.poi, h.score)),
        );
    }
    out.retain(|e| e.1 > 0.0);
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out.truncate(k);
    out
}

/// POI ids of [`topk_gsk`], sorted by id.
pub fn topk_ids(ctx: &QueryContext<'_>, u: UserId, k: usize) -> Vec<PoiId> {
    let mut ids: Vec<PoiId> = topk_gsk(ctx, u, k).into_iter().map(|e| e.0).collect();
    ids.sort_unstable();
    ids
}
