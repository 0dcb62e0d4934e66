//! Independent cascade spread: simulation, Monte-Carlo estimation and exact
//! enumeration of possible worlds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{SocialNetwork, UserId};

/// Largest edge count accepted by exact enumeration.
pub const MAX_EXACT_EDGES: usize = 20;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Whether edge `e` is live in the world identified by `world`.
#[inline]
fn live(world: u64, e: usize, w: f64) -> bool {
    let u = splitmix(world ^ splitmix(e as u64));
    ((u >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < w
}

/// One cascade in the world `world`. Each edge's coin depends only on the
/// world and the edge, so different seed sets see the same world.
pub fn spread_in_world(
    social: &SocialNetwork,
    seeds: &[UserId],
    world: u64,
    visited: &mut Vec<u32>,
    stamp: u32,
) -> usize {
    if visited.len() != social.num_users() {
        visited.clear();
        visited.resize(social.num_users(), 0);
    }
    let mut stack: Vec<UserId> = Vec::new();
    let mut count = 0;
    for &s in seeds {
        if visited[s as usize] != stamp {
            visited[s as usize] = stamp;
            stack.push(s);
            count += 1;
        }
    }
    while let Some(u) = stack.pop() {
        let base = social.out_edge_base(u);
        for (j, &(v, w)) in social.out_edges(u).iter().enumerate() {
            if visited[v as usize] != stamp && live(world, base + j, w) {
                visited[v as usize] = stamp;
                stack.push(v);
                count += 1;
            }
        }
    }
    count
}

/// Number of users activated by one random cascade from `seeds`.
pub fn simulate_ic(social: &SocialNetwork, seeds: &[UserId], rng: &mut impl Rng) -> usize {
    let mut visited = Vec::new();
    spread_in_world(social, seeds, rng.random(), &mut visited, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub sims: usize,
}

fn world_key(seed: u64, i: usize) -> u64 {
    splitmix(seed ^ splitmix(i as u64 ^ 0xa5a5_a5a5_0000_0000))
}

/// Spread of every seed set in each of `sims` shared worlds; one row per set.
fn spreads(social: &SocialNetwork, sets: &[&[UserId]], sims: usize, seed: u64) -> Vec<Vec<f64>> {
    const CHUNK: usize = 256;
    let chunks: Vec<Vec<Vec<f64>>> = (0..sims.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut visited = Vec::new();
            let mut stamp = 0u32;
            let range = c * CHUNK..((c + 1) * CHUNK).min(sims);
            sets.iter()
                .map(|s| {
                    range
                        .clone()
                        .map(|i| {
                            stamp += 1;
                            spread_in_world(social, s, world_key(seed, i), &mut visited, stamp)
                                as f64
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    (0..sets.len())
        .map(|k| chunks.iter().flat_map(|c| c[k].iter().copied()).collect())
        .collect()
}

fn summarize(xs: &[f64]) -> McEstimate {
    let n = xs.len();
    if n == 0 {
        return McEstimate {
            mean: 0.0,
            stderr: 0.0,
            sims: 0,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    McEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        sims: n,
    }
}

/// Mean cascade size over `sims` seeded worlds.
pub fn estimate_influence_mc(
    social: &SocialNetwork,
    seeds: &[UserId],
    sims: usize,
    seed: u64,
) -> Result<McEstimate> {
    if sims == 0 {
        return Err(Error::Param("at least one simulation is required".into()));
    }
    Ok(summarize(&spreads(social, &[seeds], sims, seed)[0]))
}

/// Estimates for several seed sets evaluated on the same worlds, plus the
/// standard error of each pairwise difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedMc {
    pub estimates: Vec<McEstimate>,
    samples: Vec<Vec<f64>>,
}

impl PairedMc {
    /// `(mean_a - mean_b, stderr of the difference)`.
    pub fn difference(&self, a: usize, b: usize) -> (f64, f64) {
        let d: Vec<f64> = self.samples[a]
            .iter()
            .zip(&self.samples[b])
            .map(|(x, y)| x - y)
            .collect();
        let s = summarize(&d);
        (s.mean, s.stderr)
    }
}

pub fn estimate_influence_paired(
    social: &SocialNetwork,
    sets: &[&[UserId]],
    sims: usize,
    seed: u64,
) -> Result<PairedMc> {
    if sims == 0 {
        return Err(Error::Param("at least one simulation is required".into()));
    }
    let samples = spreads(social, sets, sims, seed);
    Ok(PairedMc {
        estimates: samples.iter().map(|s| summarize(s)).collect(),
        samples,
    })
}

/// Every possible world with its probability and, per user, the users it
/// reaches as a bitmask. Needs at most 64 users and `MAX_EXACT_EDGES` edges.
pub struct WorldTable {
    users: usize,
    worlds: Vec<(f64, Vec<u64>)>,
}

impl WorldTable {
    pub fn new(social: &SocialNetwork) -> Result<Self> {
        let n = social.num_users();
        let edges = social.edges();
        if edges.len() > MAX_EXACT_EDGES || n > 64 {
            return Err(Error::TooLarge(format!(
                "exact enumeration needs at most {MAX_EXACT_EDGES} edges and 64 users, got {} and {n}",
                edges.len()
            )));
        }
        let worlds = (0u64..1 << edges.len())
            .map(|mask| {
                let mut pr = 1.0;
                let mut adj = vec![0u64; n];
                for (i, &(a, b, w)) in edges.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        pr *= w;
                        adj[a as usize] |= 1 << b;
                    } else {
                        pr *= 1.0 - w;
                    }
                }
                let reach = (0..n)
                    .map(|s| {
                        let mut seen = 1u64 << s;
                        let mut frontier = seen;
                        while frontier != 0 {
                            let mut next = 0;
                            let mut f = frontier;
                            while f != 0 {
                                let v = f.trailing_zeros() as usize;
                                f &= f - 1;
                                next |= adj[v];
                            }
                            frontier = next & !seen;
                            seen |= next;
                        }
                        seen
                    })
                    .collect();
                (pr, reach)
            })
            .filter(|w| w.0 > 0.0)
            .collect();
        Ok(WorldTable { users: n, worlds })
    }

    pub fn num_users(&self) -> usize {
        self.users
    }

    /// Expected number of users reached from `seeds`.
    pub fn influence(&self, seeds: &[UserId]) -> f64 {
        if seeds.is_empty() {
            return 0.0;
        }
        self.worlds
            .iter()
            .map(|(pr, reach)| {
                let m = seeds.iter().fold(0u64, |m, &s| m | reach[s as usize]);
                pr * m.count_ones() as f64
            })
            .sum()
    }
}

/// Expected spread summed over all `2^|E|` possible worlds.
pub fn exact_influence_possible_worlds(social: &SocialNetwork, seeds: &[UserId]) -> Result<f64> {
    Ok(WorldTable::new(social)?.influence(seeds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(w: f64) -> SocialNetwork {
        SocialNetwork::new(3, vec![(0, 1, w), (1, 2, w)]).unwrap()
    }

    #[test]
    fn certain_and_impossible_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(simulate_ic(&chain(1.0), &[0], &mut rng), 3);
        assert_eq!(simulate_ic(&chain(0.0), &[0, 2], &mut rng), 2);
        assert_eq!(simulate_ic(&chain(0.5), &[], &mut rng), 0);
        let e = estimate_influence_mc(&chain(1.0), &[0], 50, 3).unwrap();
        assert_eq!((e.mean, e.stderr), (3.0, 0.0));
    }

    #[test]
    fn single_half_edge_is_one_and_a_half() {
        let g = SocialNetwork::new(2, vec![(0, 1, 0.5)]).unwrap();
        assert_eq!(exact_influence_possible_worlds(&g, &[0]).unwrap(), 1.5);
        assert_eq!(exact_influence_possible_worlds(&g, &[]).unwrap(), 0.0);
    }

    #[test]
    fn mc_agrees_with_enumeration() {
        let g = SocialNetwork::new(
            5,
            vec![
                (0, 1, 0.4),
                (1, 2, 0.7),
                (0, 3, 0.2),
                (3, 2, 0.9),
                (2, 4, 0.5),
                (4, 0, 0.3),
            ],
        )
        .unwrap();
        let exact = exact_influence_possible_worlds(&g, &[0]).unwrap();
        let mc = estimate_influence_mc(&g, &[0], 40_000, 9).unwrap();
        assert!(
            (mc.mean - exact).abs() < 4.0 * mc.stderr,
            "{mc:?} vs {exact}"
        );
    }

    #[test]
    fn paired_estimates_share_worlds() {
        let g = chain(0.5);
        let p = estimate_influence_paired(&g, &[&[0], &[0]], 1000, 4).unwrap();
        assert_eq!(p.difference(0, 1), (0.0, 0.0));
        let q = estimate_influence_paired(&g, &[&[0, 1], &[0]], 1000, 4).unwrap();
        assert!(q.difference(0, 1).0 > 0.0);
    }

    #[test]
    fn enumeration_refuses_large_graphs() {
        let edges = (0..21).map(|i| (i, i + 1, 0.5)).collect();
        let g = SocialNetwork::new(22, edges).unwrap();
        assert!(matches!(
            exact_influence_possible_worlds(&g, &[0]),
            Err(Error::TooLarge(_))
        ));
    }
}
