//! Score thresholds and the pruning rules built on them.

use std::collections::HashMap;
use std::sync::Arc;

use crate::geo::{KeywordId, Location, PoiId, UserId, VertexId};
use crate::ignvd::NodeId;

use super::cache::BrknnCache;
use super::stream::{Hit, PartialScoreStream};
use super::QueryContext;

/// The `k` best partial scores of one user, padded with zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SbList {
    pub k: usize,
    /// Best first, at most `k` entries.
    pub entries: Vec<(PoiId, f64)>,
}

impl SbList {
    /// `s_k`, the k-th best partial score, or 0 with fewer than `k` POIs.
    pub fn threshold(&self) -> f64 {
        if self.k == 0 || self.entries.len() < self.k {
            0.0
        } else {
            self.entries[self.k - 1].1
        }
    }
}

pub fn compute_sb_list(ctx: &QueryContext<'_>, u: UserId, k: usize) -> SbList {
    let weights = ctx.index.terms.user_terms(u).to_vec();
    let entries = if weights.is_empty() || k == 0 {
        Vec::new()
    } else {
        PartialScoreStream::new(ctx, ctx.ds.users[u as usize].loc, weights)
            .take(k)
            .map(|h| (h.poi, h.score))
            .collect()
    };
    SbList { k, entries }
}

/// Best `k` partial scores among the POIs met by a bounded nearest-first
/// scan. Its threshold never exceeds the exact list's.
pub fn quick_sb_list(ctx: &QueryContext<'_>, u: UserId, k: usize, budget: usize) -> SbList {
    let weights = ctx.index.terms.user_terms(u).to_vec();
    if weights.is_empty() || k == 0 {
        return SbList {
            k,
            entries: Vec::new(),
        };
    }
    let mut hits = PartialScoreStream::new(ctx, ctx.ds.users[u as usize].loc, weights).scan(budget);
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.poi.cmp(&b.poi)));
    hits.truncate(k);
    SbList {
        k,
        entries: hits.into_iter().map(|h| (h.poi, h.score)).collect(),
    }
}

/// A stand-in for every user of `node` whose shortest paths leave through `border`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoUser {
    pub node: NodeId,
    pub border: VertexId,
    /// Keywords shared by the POI and some user represented here, sorted.
    pub keywords: Vec<KeywordId>,
    /// Largest distance from a represented user to the border; infinite when unknown.
    pub reach: f64,
    /// Most keywords any represented user shares with the POI.
    pub multiplicity: usize,
}

/// Per keyword, the best POIs for that keyword alone as seen from a border.
#[derive(Debug, Clone, Default)]
pub struct LowerBoundMap {
    pub lists: Vec<(KeywordId, Arc<Vec<Hit>>)>,
}

impl LowerBoundMap {
    pub fn get(&self, t: KeywordId) -> Option<&[Hit]> {
        self.lists.iter().find(|e| e.0 == t).map(|e| e.1.as_slice())
    }
}

/// `k + 1` entries so that one can be skipped when it is the POI under test.
pub(crate) fn border_list(ctx: &QueryContext<'_>, b: VertexId, t: KeywordId, k: usize) -> Vec<Hit> {
    PartialScoreStream::new(ctx, Location::at(b), vec![(t, 1.0)])
        .take(k + 1)
        .collect()
}

/// Builds the lists for every keyword of `pseudo`. Returns the map and the
/// number of lists that were not already cached.
pub(crate) fn sb_map_cached(
    ctx: &QueryContext<'_>,
    border: VertexId,
    keywords: &[KeywordId],
    k: usize,
    cache: Option<&BrknnCache>,
) -> (LowerBoundMap, usize) {
    let mut fresh = 0;
    let lists = keywords
        .iter()
        .map(|&t| {
            let list = match cache {
                Some(c) => {
                    let (l, new) = c.border_list(border, t, || border_list(ctx, border, t, k));
                    fresh += new as usize;
                    l
                }
                None => {
                    fresh += 1;
                    Arc::new(border_list(ctx, border, t, k))
                }
            };
            (t, list)
        })
        .collect();
    (LowerBoundMap { lists }, fresh)
}

pub fn compute_sb_map(ctx: &QueryContext<'_>, pseudo: &PseudoUser, k: usize) -> LowerBoundMap {
    sb_map_cached(ctx, pseudo.border, &pseudo.keywords, k, None).0
}

/// A user whose full score for a POI is below its own `s_k` cannot rank it in the top k.
pub fn can_prune_user(score: f64, sb: &SbList) -> bool {
    score < sb.threshold()
}

/// Whether every keyword's list holds `k` POIs other than `p` that beat `p`
/// for any represented user at any distance in `[0, reach]` from the border.
///
/// With `m` the multiplicity, `a` the list POI's weight, `c` its distance from
/// the border (floored), `a_p` and `c_p` the same for `p`, the test is
/// `a (x + c_p) > m a_p (x + c)` at both ends of the range.
pub fn can_prune_pseudo(
    ctx: &QueryContext<'_>,
    pseudo: &PseudoUser,
    p: PoiId,
    map: &LowerBoundMap,
    k: usize,
) -> bool {
    let c_p = ctx
        .index
        .oracle
        .shortest_distance(&Location::at(pseudo.border), &ctx.ds.pois[p as usize].loc);
    prune_pseudo_at(ctx, pseudo, p, c_p, map, k)
}

pub(crate) fn prune_pseudo_at(
    ctx: &QueryContext<'_>,
    pseudo: &PseudoUser,
    p: PoiId,
    c_p: f64,
    map: &LowerBoundMap,
    k: usize,
) -> bool {
    if ctx.params.alpha >= 1.0 || c_p.is_infinite() || pseudo.keywords.is_empty() {
        return true;
    }
    let m = pseudo.multiplicity.min(pseudo.keywords.len()) as f64;
    pseudo.keywords.iter().all(|&t| {
        let a_p = ctx.index.terms.poi_weight(p, t);
        match map.get(t) {
            Some(list) => dominated(
                list,
                k,
                p,
                a_p,
                c_p,
                m,
                pseudo.reach,
                ctx.params.min_distance,
            ),
            None => false,
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn dominated(
    list: &[Hit],
    k: usize,
    p: PoiId,
    a_p: f64,
    c_p: f64,
    m: f64,
    reach: f64,
    md: f64,
) -> bool {
    let mut n = 0;
    for h in list.iter().filter(|h| h.poi != p).take(k) {
        n += 1;
        let a = h.f_t;
        let c = h.dist.max(md);
        let lhs = a * c_p;
        let rhs = m * a_p * c;
        if !(lhs - rhs > 1e-12 * (lhs + rhs)) {
            return false;
        }
        if reach.is_infinite() {
            if a < m * a_p {
                return false;
            }
        } else {
            let far = (a - m * a_p) * reach + (lhs - rhs);
            if !(far > 1e-12 * (lhs + rhs + (a + m * a_p) * reach)) {
                return false;
            }
        }
    }
    n == k
}

/// Most of `keywords` held by a single user among the given postings.
pub(crate) fn multiplicity<'s>(
    keywords: &[KeywordId],
    postings: impl Fn(KeywordId) -> &'s [UserId],
) -> usize {
    if keywords.len() <= 1 {
        return keywords.len();
    }
    let mut count: HashMap<UserId, usize> = HashMap::new();
    let mut best = 0;
    for &t in keywords {
        for &u in postings(t) {
            let c = count.entry(u).or_insert(0);
            *c += 1;
            best = best.max(*c);
        }
        if best == keywords.len() {
            break;
        }
    }
    best
}

/// The pseudo-users of `node` for a POI with `keywords`, one per border.
pub(crate) fn node_pseudo_users(
    ctx: &QueryContext<'_>,
    node: NodeId,
    keywords: &[KeywordId],
) -> Vec<PseudoUser> {
    let inv = ctx.index.inverted(node);
    let keys = inv.user_keywords_in(keywords);
    let m = multiplicity(&keys, |t| {
        inv.get(t).map(|x| x.users.as_slice()).unwrap_or(&[])
    });
    let gnode = ctx.index.gtree.node(node);
    gnode
        .borders
        .iter()
        .zip(ctx.index.user_reach(node))
        .map(|(&b, &reach)| PseudoUser {
            node,
            border: b,
            keywords: keys.clone(),
            reach,
            multiplicity: m,
        })
        .collect()
}

/// No non-social user beneath `node` can rank `p` in its top k. Needs every
/// border's pseudo-user to prune; a node with no borders cannot reach `p`.
pub fn can_prune_node(ctx: &QueryContext<'_>, p: PoiId, node: NodeId, k: usize) -> bool {
    let keywords: Vec<KeywordId> = ctx.ds.pois[p as usize]
        .keywords
        .iter()
        .map(|e| e.0)
        .collect();
    node_pseudo_users(ctx, node, &keywords).iter().all(|pu| {
        let map = compute_sb_map(ctx, pu, k);
        can_prune_pseudo(ctx, pu, p, &map, k)
    })
}
