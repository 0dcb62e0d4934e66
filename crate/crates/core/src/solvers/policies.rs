//! Baseline selection policies.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geo::{GeoSocialDataset, UserId, VertexId};
use crate::influence::{
    greedy_max_coverage, lazy_greedy, HeterogeneousGraph, RrCollection, RrMode,
};
use crate::scoring::social_relevance;

use super::{ms, Instance, Method, SolverConfig, SolverOutcome};

struct Cover {
    hit: Vec<bool>,
}

/// Greedy max coverage of plain sets over `0..universe`; returns `b` indices.
pub(crate) fn greedy_cover(sets: &[Vec<u32>], universe: usize, b: usize) -> Vec<u32> {
    let idx: Vec<u32> = (0..sets.len() as u32).collect();
    let mut st = Cover {
        hit: vec![false; universe],
    };
    lazy_greedy(
        &idx,
        b,
        &mut st,
        |s, c| {
            sets[c as usize]
                .iter()
                .filter(|&&u| !s.hit[u as usize])
                .count() as f64
        },
        |s, c| {
            sets[c as usize]
                .iter()
                .for_each(|&u| s.hit[u as usize] = true)
        },
    )
}

fn finish(inst: &Instance<'_>, method: Method, picks: &[u32], start: Instant) -> SolverOutcome {
    let mut out = SolverOutcome::plain(method, inst.to_pois(picks));
    out.timings.selection_ms = ms(start);
    out
}

/// Vertices within `radius` of `src`, with their distances.
fn ball(ds: &GeoSocialDataset, src: VertexId, radius: f64) -> Vec<(VertexId, f64)> {
    let mut dist = std::collections::HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut out = Vec::new();
    dist.insert(src, 0.0);
    heap.push(Reverse((0u64, src)));
    while let Some(Reverse((d, v))) = heap.pop() {
        let d = f64::from_bits(d);
        if dist.get(&v).is_some_and(|&x| x < d) {
            continue;
        }
        out.push((v, d));
        for (w, len) in ds.road.neighbors(v) {
            let nd = d + len;
            if nd <= radius && dist.get(&w).is_none_or(|&x| nd < x) {
                dist.insert(w, nd);
                heap.push(Reverse((nd.to_bits(), w)));
            }
        }
    }
    out
}

/// Users within `radius` road meters of a candidate who share a keyword with
/// it or have a friend who checked in there, measured between nearest
/// vertices plus offsets.
pub(crate) fn relevant_nearby(inst: &Instance<'_>, radius: f64) -> Vec<Vec<UserId>> {
    let ds = inst.ctx.ds;
    let terms = &inst.ctx.index.terms;
    let mut at: Vec<Vec<UserId>> = vec![Vec::new(); ds.road.num_vertices()];
    for (u, user) in ds.users.iter().enumerate() {
        at[user.loc.vertex as usize].push(u as UserId);
    }
    inst.spec
        .pois
        .iter()
        .map(|&p| {
            let loc = ds.pois[p as usize].loc;
            let mut users: Vec<UserId> = ball(ds, loc.vertex, radius)
                .into_iter()
                .flat_map(|(v, d)| at[v as usize].iter().map(move |&u| (u, d)))
                .filter(|&(u, d)| d + loc.offset + ds.users[u as usize].loc.offset <= radius)
                .map(|(u, _)| u)
                .filter(|&u| terms.textual(u, p) > 0.0 || social_relevance(ds, u, p) > 0.0)
                .collect();
            users.sort_unstable();
            users
        })
        .collect()
}

/// Greedy cover of relevant users within the configured radius.
pub fn policy_relevance(inst: &Instance<'_>, cfg: &SolverConfig) -> SolverOutcome {
    let start = Instant::now();
    let sets = relevant_nearby(inst, cfg.relevance_radius);
    let picks = greedy_cover(&sets, inst.ctx.ds.num_users(), inst.spec.b);
    finish(inst, Method::Relevance, &picks, start)
}

/// Ranks users holding any candidate in their top-k by greedy RR coverage,
/// keeps the best `cfg.influencers`, then covers as many of them as possible.
pub fn policy_influencer(inst: &Instance<'_>, cfg: &SolverConfig) -> SolverOutcome {
    let start = Instant::now();
    let mut relevant: Vec<UserId> = inst.brknn.members.iter().flatten().copied().collect();
    relevant.sort_unstable();
    relevant.dedup();
    let social = &inst.ctx.ds.social;
    let g = HeterogeneousGraph::new(
        social,
        relevant.clone(),
        relevant.iter().map(|&u| vec![u]).collect(),
    );
    let mut r = RrCollection::new(
        RrMode::Full,
        relevant.len(),
        inst.spec.seed ^ 0x1f1f_0000_0000_0003,
    );
    r.grow_to(&g, cfg.influencer_rr_sets);
    let all: Vec<u32> = (0..relevant.len() as u32).collect();
    let mut influencer = vec![false; social.num_users()];
    for i in greedy_max_coverage(&r, &all, cfg.influencers.min(relevant.len())) {
        influencer[relevant[i as usize] as usize] = true;
    }
    let sets: Vec<Vec<u32>> = inst
        .brknn
        .members
        .iter()
        .map(|m| {
            m.iter()
                .copied()
                .filter(|&u| influencer[u as usize])
                .collect()
        })
        .collect();
    let picks = greedy_cover(&sets, social.num_users(), inst.spec.b);
    let mut out = finish(inst, Method::Influencer, &picks, start);
    out.rr_sets = r.len();
    out
}

/// Greedy maximum of the number of distinct reverse top-k users.
pub fn policy_maxbrknn(inst: &Instance<'_>) -> SolverOutcome {
    let start = Instant::now();
    let picks = greedy_cover(&inst.brknn.members, inst.ctx.ds.num_users(), inst.spec.b);
    finish(inst, Method::Maxbrknn, &picks, start)
}

/// `b` candidates drawn uniformly with the query seed, in candidate order.
pub fn policy_random(inst: &Instance<'_>) -> SolverOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(inst.spec.seed);
    let mut picks: Vec<u32> = sample(&mut rng, inst.spec.pois.len(), inst.spec.b)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    picks.sort_unstable();
    finish(inst, Method::Random, &picks, start)
}
