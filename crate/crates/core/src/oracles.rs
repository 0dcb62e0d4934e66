//! Brute-force reference answers.
//!
//! Nothing here touches the index, the distance oracle or the scoring module:
//! distances come from a plain Dijkstra per user and term weights are
//! recomputed from the raw dataset. Arithmetic follows the same operation
//! order as the fast paths so that equal scores stay equal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::geo::{GeoSocialDataset, KeywordId, Location, PoiId, UserId};
use crate::scoring::ScoreParams;

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Vertex distances from `src` by textbook Dijkstra.
pub fn vertex_distances(ds: &GeoSocialDataset, src: u32) -> Vec<f64> {
    let road = &ds.road;
    let mut dist = vec![f64::INFINITY; road.num_vertices()];
    dist[src as usize] = 0.0;
    let mut heap = BinaryHeap::from([Entry(0.0, src)]);
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for (w, len) in road.neighbors(v) {
            let nd = d + len;
            if nd < dist[w as usize] {
                dist[w as usize] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    dist
}

fn location_distance(from: &Location, dist_from: &[f64], to: &Location) -> f64 {
    if from == to {
        return 0.0;
    }
    from.offset + dist_from[to.vertex as usize] + to.offset
}

fn idf(n: usize, df: usize) -> f64 {
    if df == 0 {
        0.0
    } else {
        (1.0 + n as f64 / df as f64).ln()
    }
}

/// tf-idf weights recomputed from the raw keyword lists.
pub struct ReferenceWeights {
    pub poi: Vec<Vec<(KeywordId, f64)>>,
    pub user: Vec<Vec<(KeywordId, f64)>>,
}

impl ReferenceWeights {
    pub fn new(ds: &GeoSocialDataset) -> Self {
        let nk = ds.vocab.len();
        let mut pdf = vec![0usize; nk];
        let mut udf = vec![0usize; nk];
        ds.pois
            .iter()
            .flat_map(|p| &p.keywords)
            .for_each(|&(t, _)| pdf[t as usize] += 1);
        ds.users
            .iter()
            .flat_map(|u| &u.keywords)
            .for_each(|&(t, _)| udf[t as usize] += 1);
        let poi = ds
            .pois
            .iter()
            .map(|p| {
                p.keywords
                    .iter()
                    .map(|&(t, w)| (t, w * idf(ds.pois.len(), pdf[t as usize])))
                    .collect()
            })
            .collect();
        let user = ds
            .users
            .iter()
            .map(|u| {
                u.keywords
                    .iter()
                    .map(|&(t, w)| (t, w * idf(ds.users.len(), udf[t as usize])))
                    .collect()
            })
            .collect();
        ReferenceWeights { poi, user }
    }
}

fn textual(a: &[(KeywordId, f64)], b: &[(KeywordId, f64)]) -> f64 {
    let mut sum = 0.0;
    for &(t, wa) in a {
        if let Some(&(_, wb)) = b.iter().find(|e| e.0 == t) {
            sum += wa * wb;
        }
    }
    sum
}

/// Undirected friend lists straight from the social edge list.
pub fn friend_lists(ds: &GeoSocialDataset) -> Vec<Vec<UserId>> {
    let mut f = vec![Vec::new(); ds.users.len()];
    for &(a, b, _) in ds.social.edges() {
        f[a as usize].push(b);
        f[b as usize].push(a);
    }
    for l in &mut f {
        l.sort_unstable();
        l.dedup();
    }
    f
}

/// Every POI's score for user `u`.
pub fn user_scores(
    ds: &GeoSocialDataset,
    params: &ScoreParams,
    weights: &ReferenceWeights,
    friends: &[Vec<UserId>],
    u: UserId,
) -> Vec<f64> {
    let user = &ds.users[u as usize];
    let dist = vertex_distances(ds, user.loc.vertex);
    let fr = &friends[u as usize];
    ds.pois
        .iter()
        .enumerate()
        .map(|(i, poi)| {
            let d = location_distance(&user.loc, &dist, &poi.loc);
            if d == f64::INFINITY {
                return 0.0;
            }
            let f_s = if fr.is_empty() {
                0.0
            } else {
                fr.iter().filter(|f| poi.checkins.contains(f)).count() as f64 / fr.len() as f64
            };
            let f_t = textual(&weights.user[u as usize], &weights.poi[i]);
            (params.alpha * f_s + (1.0 - params.alpha) * f_t) / d.max(params.min_distance)
        })
        .collect()
}

fn best_k(scores: &[f64], k: usize) -> Vec<(PoiId, f64)> {
    let mut all: Vec<(PoiId, f64)> = scores
        .iter()
        .enumerate()
        .filter(|e| *e.1 > 0.0)
        .map(|(i, &s)| (i as PoiId, s))
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// The `k` best POIs for `u` with positive score, ties by id.
pub fn oracle_topk(
    ds: &GeoSocialDataset,
    params: &ScoreParams,
    u: UserId,
    k: usize,
) -> Vec<(PoiId, f64)> {
    let w = ReferenceWeights::new(ds);
    let f = friend_lists(ds);
    best_k(&user_scores(ds, params, &w, &f, u), k)
}

/// Reverse top-k users of each POI in `pois`, by scoring every user against every POI.
pub fn oracle_brknn(
    ds: &GeoSocialDataset,
    params: &ScoreParams,
    pois: &[PoiId],
    k: usize,
) -> Vec<Vec<UserId>> {
    let w = ReferenceWeights::new(ds);
    let f = friend_lists(ds);
    let tops: Vec<Vec<PoiId>> = (0..ds.users.len() as UserId)
        .into_par_iter()
        .map(|u| {
            best_k(&user_scores(ds, params, &w, &f, u), k)
                .into_iter()
                .map(|e| e.0)
                .collect()
        })
        .collect();
    pois.iter()
        .map(|p| {
            (0..ds.users.len() as UserId)
                .filter(|&u| tops[u as usize].contains(p))
                .collect()
        })
        .collect()
}

/// How [`oracle_influence`] evaluates spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfluenceMode {
    /// Sum over every live/blocked assignment of the social edges.
    Exact,
    /// Mean of `sims` independent cascades drawn from `seed`.
    Mc { sims: usize, seed: u64 },
}

/// Largest edge count accepted by the exact oracles.
pub const ORACLE_MAX_EDGES: usize = 20;

/// Users reachable from `seeds` over `live` edges within `max_hops` steps.
fn reached(n: usize, live: &[(UserId, UserId)], seeds: &[UserId], max_hops: usize) -> usize {
    let mut depth = vec![usize::MAX; n];
    let mut frontier: Vec<UserId> = Vec::new();
    for &s in seeds {
        if depth[s as usize] == usize::MAX {
            depth[s as usize] = 0;
            frontier.push(s);
        }
    }
    let mut count = frontier.len();
    let mut h = 0;
    while !frontier.is_empty() && h < max_hops {
        h += 1;
        let mut next = Vec::new();
        for &(a, b) in live {
            if depth[a as usize] == h - 1 && depth[b as usize] == usize::MAX {
                depth[b as usize] = h;
                next.push(b);
                count += 1;
            }
        }
        frontier = next;
    }
    count
}

fn enumerate(
    social: &crate::geo::SocialNetwork,
    seeds: &[UserId],
    max_hops: usize,
) -> crate::Result<f64> {
    let edges = social.edges();
    if edges.len() > ORACLE_MAX_EDGES {
        return Err(crate::Error::TooLarge(format!(
            "{} social edges exceed {ORACLE_MAX_EDGES}",
            edges.len()
        )));
    }
    let mut total = 0.0;
    for mask in 0u64..1 << edges.len() {
        let mut pr = 1.0;
        let mut live = Vec::new();
        for (i, &(a, b, w)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                pr *= w;
                live.push((a, b));
            } else {
                pr *= 1.0 - w;
            }
        }
        if pr > 0.0 {
            total += pr * reached(social.num_users(), &live, seeds, max_hops) as f64;
        }
    }
    Ok(total)
}

fn simulate(
    social: &crate::geo::SocialNetwork,
    seeds: &[UserId],
    max_hops: usize,
    sims: usize,
    seed: u64,
) -> (f64, f64) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let edges = social.edges();
    let xs: Vec<f64> = (0..sims)
        .map(|_| {
            let live: Vec<(UserId, UserId)> = edges
                .iter()
                .filter(|e| rng.random::<f64>() < e.2)
                .map(|e| (e.0, e.1))
                .collect();
            reached(social.num_users(), &live, seeds, max_hops) as f64
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / sims as f64;
    let var = if sims > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (sims - 1) as f64
    } else {
        0.0
    };
    (mean, (var / sims as f64).sqrt())
}

/// Expected number of users activated from `seeds`, with its standard error
/// (0 in exact mode).
pub fn oracle_influence(
    social: &crate::geo::SocialNetwork,
    seeds: &[UserId],
    mode: InfluenceMode,
) -> crate::Result<(f64, f64)> {
    oracle_influence_within(social, seeds, usize::MAX, mode)
}

/// As [`oracle_influence`], counting only users reached by a live path of at
/// most `max_hops` edges.
pub fn oracle_influence_within(
    social: &crate::geo::SocialNetwork,
    seeds: &[UserId],
    max_hops: usize,
    mode: InfluenceMode,
) -> crate::Result<(f64, f64)> {
    match mode {
        InfluenceMode::Exact => Ok((enumerate(social, seeds, max_hops)?, 0.0)),
        InfluenceMode::Mc { sims, .. } if sims == 0 => Err(crate::Error::Param(
            "at least one simulation is required".into(),
        )),
        InfluenceMode::Mc { sims, seed } => Ok(simulate(social, seeds, max_hops, sims, seed)),
    }
}
