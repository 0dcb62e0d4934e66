//! HE: aggressive candidate generation with verification on demand.

use std::time::Instant;

use rayon::prelude::*;

use crate::brknn::{generate_candidates, topk_ids, BrknnCache, BrknnConfig, KeywordFilter};
use crate::error::Result;
use crate::geo::UserId;
use crate::influence::{greedy_local_2hop, greedy_ratio, local_influence_2hop, HeterogeneousGraph};

use super::{ms, Instance, Method, SolverConfig, SolverOutcome};

/// Verifies candidate users in order of `|friends| * |candidate POIs|`, a
/// batch at a time. After each batch the two-hop greedy pick on verified
/// members is compared with the pick on an optimistic graph that also counts
/// every unverified candidate; once the ratio reaches `1 - 1/e` the verified
/// pick is returned. Reverse top-k sets in `inst` are not used.
pub fn solve_he_prepared(inst: &Instance<'_>, cfg: &SolverConfig) -> Result<SolverOutcome> {
    let ctx = &inst.ctx;
    let spec = &inst.spec;
    let min_users = cfg
        .he_min_users
        .unwrap_or(ctx.index.config.frequency_threshold);
    let bcfg = BrknnConfig {
        k: spec.k,
        filter: KeywordFilter::UserFrequent { min_users },
        trace: false,
    };
    let (cands, brknn_ms) = inst.he_candidates(min_users, || {
        generate_candidates(ctx, &spec.pois, &bcfg, &BrknnCache::new(spec.k, spec.alpha))
    })?;

    let start = Instant::now();
    let slot: std::collections::HashMap<_, _> =
        spec.pois.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut order: Vec<usize> = (0..cands.users.len()).collect();
    let priority = |i: usize| {
        let (u, al) = &cands.users[i];
        ctx.ds.users[*u as usize].friends.len() * al.len()
    };
    order.sort_by_key(|&i| (std::cmp::Reverse(priority(i)), cands.users[i].0));
    let mut rank = vec![0usize; cands.users.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    // Per candidate POI: (rank, user) of every candidate user.
    let mut pending: Vec<Vec<(usize, UserId)>> = vec![Vec::new(); spec.pois.len()];
    for (i, (u, al)) in cands.users.iter().enumerate() {
        for p in al {
            pending[slot[p]].push((rank[i], *u));
        }
    }

    let social = &ctx.ds.social;
    let all = inst.candidates();
    let batch = cfg.he_batch.max(1);
    let mut verified: Vec<Vec<UserId>> = vec![Vec::new(); spec.pois.len()];
    let mut done = 0;
    let mut iterations = 0;
    loop {
        let end = (done + batch).min(order.len());
        let tops: Vec<Vec<_>> = order[done..end]
            .par_iter()
            .map(|&i| topk_ids(ctx, cands.users[i].0, spec.k))
            .collect();
        for (&i, top) in order[done..end].iter().zip(&tops) {
            let (u, al) = &cands.users[i];
            for p in al {
                if top.binary_search(p).is_ok() {
                    verified[slot[p]].push(*u);
                }
            }
        }
        done = end;
        iterations += 1;

        let optimistic: Vec<Vec<UserId>> = verified
            .iter()
            .zip(&pending)
            .map(|(v, pend)| {
                v.iter()
                    .copied()
                    .chain(pend.iter().filter(|e| e.0 >= done).map(|e| e.1))
                    .collect()
            })
            .collect();
        let g_ver = HeterogeneousGraph::new(social, spec.pois.clone(), verified.clone());
        let g_opt = HeterogeneousGraph::new(social, spec.pois.clone(), optimistic);
        let pick = greedy_local_2hop(&g_ver, &all, spec.b);
        let value = local_influence_2hop(social, &g_ver.seeds(&pick));
        let best = local_influence_2hop(
            social,
            &g_opt.seeds(&greedy_local_2hop(&g_opt, &all, spec.b)),
        );
        let ratio = if best > 0.0 {
            (value / best).min(1.0)
        } else {
            1.0
        };
        if ratio >= greedy_ratio() || done == order.len() {
            let mut out = SolverOutcome::plain(Method::He, inst.to_pois(&pick));
            out.estimate = Some(value);
            out.lower = Some(value);
            out.ratio = Some(ratio);
            out.certified = ratio >= greedy_ratio();
            out.iterations = iterations;
            out.timings.brknn_ms = brknn_ms;
            out.timings.selection_ms = ms(start);
            return Ok(out);
        }
    }
}
