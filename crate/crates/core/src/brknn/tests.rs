use std::collections::HashSet;

use super::*;
use crate::geo::{PoiId, UserId};
use crate::ignvd::GTree;
use crate::oracles::{
    friend_lists, oracle_brknn, oracle_topk, user_scores, vertex_distances, ReferenceWeights,
};
use crate::testutil::small_world;
use crate::DistanceStrategy;

fn params(alpha: f64) -> crate::scoring::ScoreParams {
    crate::scoring::ScoreParams::new(alpha).unwrap()
}

#[test]
fn stream_yields_every_relevant_poi_in_score_order() {
    let (ds, index) = small_world(3, DistanceStrategy::Dijkstra);
    let ctx = QueryContext::new(&ds, &index, params(0.0)).unwrap();
    let w = ReferenceWeights::new(&ds);
    let f = friend_lists(&ds);
    for u in (0..ds.num_users() as UserId).step_by(17) {
        let weights = index.terms.user_terms(u).to_vec();
        if weights.is_empty() {
            continue;
        }
        let got: Vec<(PoiId, f64)> =
            PartialScoreStream::new(&ctx, ds.users[u as usize].loc, weights)
                .map(|h| (h.poi, h.score))
                .collect();
        let scores = user_scores(&ds, &ctx.params, &w, &f, u);
        let mut want: Vec<(PoiId, f64)> = scores
            .iter()
            .enumerate()
            .filter(|e| *e.1 > 0.0)
            .map(|(i, &s)| (i as PoiId, s))
            .collect();
        want.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        assert_eq!(got, want, "user {u}");
    }
}

#[test]
fn quick_lists_never_exceed_the_exact_threshold() {
    let (ds, index) = small_world(4, DistanceStrategy::HubLabels);
    let ctx = QueryContext::new(&ds, &index, params(0.5)).unwrap();
    for u in (0..ds.num_users() as UserId).step_by(5) {
        for k in [1, 3, 8] {
            let exact = compute_sb_list(&ctx, u, k);
            for budget in [1, k, 4 * k] {
                assert!(
                    quick_sb_list(&ctx, u, k, budget).threshold() <= exact.threshold(),
                    "u {u} k {k}"
                );
            }
            assert_eq!(quick_sb_list(&ctx, u, k, usize::MAX), exact, "u {u} k {k}");
        }
    }
}

#[test]
fn topk_matches_brute_force() {
    let (ds, index) = small_world(5, DistanceStrategy::HubLabels);
    for alpha in [0.0, 0.6, 1.0] {
        let ctx = QueryContext::new(&ds, &index, params(alpha)).unwrap();
        for k in [1, 4, 10] {
            for u in (0..ds.num_users() as UserId).step_by(7) {
                assert_eq!(
                    topk_gsk(&ctx, u, k),
                    oracle_topk(&ds, &ctx.params, u, k),
                    "u {u} k {k} alpha {alpha}"
                );
            }
        }
    }
}

#[test]
fn batch_matches_brute_force() {
    for (seed, strategy) in [
        (1, DistanceStrategy::Dijkstra),
        (2, DistanceStrategy::HubLabels),
    ] {
        let (ds, index) = small_world(seed, strategy);
        let pois: Vec<PoiId> = (0..ds.num_pois() as PoiId).step_by(3).collect();
        for (alpha, k) in [(0.6, 5), (0.3, 1), (0.9, 12), (1.0, 3), (0.0, 4)] {
            let ctx = QueryContext::new(&ds, &index, params(alpha)).unwrap();
            let got = batch_brknn(&ctx, &pois, k).unwrap();
            let want = oracle_brknn(&ds, &ctx.params, &pois, k);
            assert_eq!(got.pois, pois);
            assert_eq!(got.members, want, "seed {seed} alpha {alpha} k {k}");
        }
    }
}

#[test]
fn keyword_filter_keeps_results_exact() {
    let (ds, index) = small_world(8, DistanceStrategy::HubLabels);
    let pois: Vec<PoiId> = (0..ds.num_pois() as PoiId).collect();
    let ctx = QueryContext::new(&ds, &index, params(0.6)).unwrap();
    let k = 6;
    let plain = batch_brknn(&ctx, &pois, k).unwrap();
    let cfg = BrknnConfig {
        k,
        filter: KeywordFilter::UserFrequent { min_users: 60 },
        trace: false,
    };
    let filtered = batch_brknn_with(&ctx, &pois, &cfg, &BrknnCache::new(k, 0.6)).unwrap();
    assert_eq!(plain.members, filtered.members);
}

#[test]
fn every_recorded_prune_is_sound() {
    let (ds, index) = small_world(11, DistanceStrategy::HubLabels);
    let k = 3;
    let ctx = QueryContext::new(&ds, &index, params(0.5)).unwrap();
    let pois: Vec<PoiId> = (0..ds.num_pois() as PoiId).collect();
    let cfg = BrknnConfig {
        k,
        filter: KeywordFilter::All,
        trace: true,
    };
    let res = batch_brknn_with(&ctx, &pois, &cfg, &BrknnCache::new(k, 0.5)).unwrap();
    assert!(
        res.stats.pruned_borders + res.stats.pruned_outside > 0,
        "{:?}",
        res.stats
    );

    let w = ReferenceWeights::new(&ds);
    let f = friend_lists(&ds);
    let tops: Vec<HashSet<PoiId>> = (0..ds.num_users() as UserId)
        .map(|u| {
            let s = user_scores(&ds, &ctx.params, &w, &f, u);
            let mut all: Vec<(PoiId, f64)> = s
                .iter()
                .enumerate()
                .filter(|e| *e.1 > 0.0)
                .map(|(i, &x)| (i as PoiId, x))
                .collect();
            all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            all.into_iter().take(k).map(|e| e.0).collect()
        })
        .collect();
    let social = |p: PoiId| {
        ds.socially_relevant_users(p)
            .into_iter()
            .collect::<HashSet<_>>()
    };
    let in_node = |node, u: UserId| {
        index
            .gtree
            .node(node)
            .contains(ds.users[u as usize].loc.vertex)
    };
    let gtree: &GTree = &index.gtree;
    for e in &res.trace {
        match *e {
            PruneEvent::Score { poi, user } => {
                assert!(!tops[user as usize].contains(&poi), "{e:?}")
            }
            PruneEvent::Border { poi, node, border } => {
                let dp = vertex_distances(&ds, ds.pois[poi as usize].loc.vertex);
                let db = vertex_distances(&ds, border);
                let soc = social(poi);
                for u in 0..ds.num_users() as UserId {
                    let v = ds.users[u as usize].loc.vertex as usize;
                    let via = db[v] + dp[border as usize] == dp[v];
                    if in_node(node, u) && via && !soc.contains(&u) {
                        assert!(!tops[u as usize].contains(&poi), "{e:?} user {u}");
                    }
                }
            }
            PruneEvent::Node { poi, node } => {
                let soc = social(poi);
                for u in 0..ds.num_users() as UserId {
                    if in_node(node, u) && !soc.contains(&u) {
                        assert!(!tops[u as usize].contains(&poi), "{e:?} user {u}");
                    }
                }
            }
            PruneEvent::Outside { poi, node } => {
                assert!(gtree.node(node).contains(ds.pois[poi as usize].loc.vertex));
                let soc = social(poi);
                for u in 0..ds.num_users() as UserId {
                    if !in_node(node, u) && !soc.contains(&u) {
                        assert!(!tops[u as usize].contains(&poi), "{e:?} user {u}");
                    }
                }
            }
        }
    }
}

#[test]
fn threshold_is_zero_below_k_entries() {
    let sb = SbList {
        k: 3,
        entries: vec![(0, 0.5), (1, 0.25)],
    };
    assert_eq!(sb.threshold(), 0.0);
    assert!(!can_prune_user(0.0, &sb));
    let sb = SbList {
        k: 2,
        entries: vec![(0, 0.5), (1, 0.25)],
    };
    assert!(can_prune_user(0.2, &sb));
    assert!(!can_prune_user(0.25, &sb));
}

#[test]
fn cache_is_shared_across_runs() {
    let (ds, index) = small_world(4, DistanceStrategy::HubLabels);
    let ctx = QueryContext::new(&ds, &index, params(0.6)).unwrap();
    let cache = BrknnCache::new(4, 0.6);
    let cfg = BrknnConfig::new(4);
    let pois: Vec<PoiId> = (0..30).collect();
    let a = batch_brknn_with(&ctx, &pois, &cfg, &cache).unwrap();
    let b = batch_brknn_with(&ctx, &pois, &cfg, &cache).unwrap();
    assert_eq!(a.members, b.members);
    assert_eq!(b.stats.sb_lists_computed + b.stats.border_lists_computed, 0);
    assert!(batch_brknn_with(&ctx, &pois, &BrknnConfig::new(5), &cache).is_err());
}

#[test]
fn rejects_bad_input() {
    let (ds, index) = small_world(4, DistanceStrategy::Dijkstra);
    let ctx = QueryContext::new(&ds, &index, params(0.6)).unwrap();
    assert!(batch_brknn(&ctx, &[0], 0).is_err());
    assert!(batch_brknn(&ctx, &[ds.num_pois() as PoiId], 3).is_err());
}
