//! Exact influence restricted to live paths of at most two hops.
//!
//! A non-seed `v` is reached in one hop with probability
//! `q1(v) = 1 - prod_{s in seeds, s -> v} (1 - w(s, v))`, and a non-seed `u`
//! within two hops with `1 - prod_{v -> u} (1 - w(v, u) q1(v))`. The events
//! inside the second product involve disjoint edge sets (each `v` contributes
//! its own edge into `u` and its own in-edges from seeds), so they are
//! independent and the product is exact.

use std::collections::HashMap;

use crate::geo::{SocialNetwork, UserId};

/// Incrementally maintained two-hop influence of a growing seed set.
#[derive(Clone)]
pub struct LocalInfluence<'a> {
    social: &'a SocialNetwork,
    seed: Vec<bool>,
    /// Product over seed in-neighbours of `1 - w`.
    miss0: Vec<f64>,
    q1: Vec<f64>,
    p: Vec<f64>,
    total: f64,
}

impl<'a> LocalInfluence<'a> {
    pub fn new(social: &'a SocialNetwork) -> Self {
        let n = social.num_users();
        LocalInfluence {
            social,
            seed: vec![false; n],
            miss0: vec![1.0; n],
            q1: vec![0.0; n],
            p: vec![0.0; n],
            total: 0.0,
        }
    }

    pub fn value(&self) -> f64 {
        self.total
    }

    fn reach_prob(&self, u: UserId, q1: &impl Fn(UserId) -> f64) -> f64 {
        let miss: f64 = self
            .social
            .in_edges(u)
            .iter()
            .map(|&(v, w)| 1.0 - w * q1(v))
            .product();
        1.0 - miss
    }

    /// New `q1` values and new `p` values caused by adding `add`.
    fn changes(&self, add: &[UserId]) -> (HashMap<UserId, f64>, HashMap<UserId, f64>) {
        let fresh: Vec<UserId> = {
            let mut f: Vec<UserId> = add
                .iter()
                .copied()
                .filter(|&u| !self.seed[u as usize])
                .collect();
            f.sort_unstable();
            f.dedup();
            f
        };
        let mut miss0: HashMap<UserId, f64> = HashMap::new();
        for &s in &fresh {
            for &(v, w) in self.social.out_edges(s) {
                let m = miss0.entry(v).or_insert(self.miss0[v as usize]);
                *m *= 1.0 - w;
            }
        }
        let is_seed = |u: UserId| self.seed[u as usize] || fresh.binary_search(&u).is_ok();
        let mut q1: HashMap<UserId, f64> = HashMap::new();
        for &s in &fresh {
            q1.insert(s, 1.0);
        }
        for (&v, &m) in &miss0 {
            if !is_seed(v) {
                q1.insert(v, 1.0 - m);
            }
        }
        let mut p: HashMap<UserId, f64> = HashMap::new();
        for &s in &fresh {
            p.insert(s, 1.0);
        }
        let lookup = |v: UserId| q1.get(&v).copied().unwrap_or(self.q1[v as usize]);
        for &v in q1.keys() {
            for &(u, _) in self.social.out_edges(v) {
                if !is_seed(u) && !p.contains_key(&u) {
                    p.insert(u, self.reach_prob(u, &lookup));
                }
            }
        }
        (q1, p)
    }

    /// Increase in two-hop influence if `add` joined the seeds.
    pub fn gain(&self, add: &[UserId]) -> f64 {
        let (_, p) = self.changes(add);
        p.iter().map(|(&u, &x)| x - self.p[u as usize]).sum()
    }

    pub fn add(&mut self, add: &[UserId]) {
        let (q1, p) = self.changes(add);
        for &s in add {
            if !self.seed[s as usize] {
                self.seed[s as usize] = true;
                for &(v, w) in self.social.out_edges(s) {
                    self.miss0[v as usize] *= 1.0 - w;
                }
            }
        }
        for (u, x) in q1 {
            self.q1[u as usize] = x;
        }
        for (u, x) in p {
            self.total += x - self.p[u as usize];
            self.p[u as usize] = x;
        }
    }
}

/// `I_L^2(seeds)`: expected number of users reached from `seeds` by a live
/// path of at most two edges.
pub fn local_influence_2hop(social: &SocialNetwork, seeds: &[UserId]) -> f64 {
    let n = social.num_users();
    let mut seed = vec![false; n];
    for &s in seeds {
        seed[s as usize] = true;
    }
    let mut q1 = vec![0.0; n];
    for v in 0..n {
        q1[v] = if seed[v] {
            1.0
        } else {
            1.0 - social
                .in_edges(v as UserId)
                .iter()
                .filter(|e| seed[e.0 as usize])
                .map(|&(_, w)| 1.0 - w)
                .product::<f64>()
        };
    }
    (0..n)
        .map(|u| {
            if seed[u] {
                1.0
            } else {
                1.0 - social
                    .in_edges(u as UserId)
                    .iter()
                    .map(|&(v, w)| 1.0 - w * q1[v as usize])
                    .product::<f64>()
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn certain_edges_count_the_two_hop_ball() {
        let g = SocialNetwork::new(5, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (4, 0, 1.0)])
            .unwrap();
        assert_eq!(local_influence_2hop(&g, &[0]), 3.0);
        assert_eq!(local_influence_2hop(&g, &[]), 0.0);
        assert_eq!(local_influence_2hop(&g, &[4, 2]), 5.0);
    }

    fn graph() -> impl Strategy<Value = SocialNetwork> {
        (2u32..9).prop_flat_map(|n| {
            proptest::collection::btree_map((0..n, 0..n), 0.0f64..=1.0, 0..14).prop_map(move |m| {
                let edges = m
                    .into_iter()
                    .filter(|((a, b), _)| a != b)
                    .map(|((a, b), w)| (a, b, w))
                    .collect();
                SocialNetwork::new(n as usize, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn incremental_matches_direct(g in graph(), picks in proptest::collection::vec(proptest::collection::vec(0u32..9, 0..3), 1..4)) {
            let n = g.num_users() as u32;
            let mut inc = LocalInfluence::new(&g);
            let mut all = Vec::new();
            for pick in picks {
                let pick: Vec<UserId> = pick.into_iter().filter(|&u| u < n).collect();
                let before = inc.value();
                let gain = inc.gain(&pick);
                inc.add(&pick);
                all.extend(pick);
                let direct = local_influence_2hop(&g, &all);
                prop_assert!((inc.value() - direct).abs() < 1e-9);
                prop_assert!((before + gain - direct).abs() < 1e-9);
            }
        }

        #[test]
        fn matches_truncated_enumeration(g in graph(), seeds in proptest::collection::vec(0u32..9, 0..4)) {
            use crate::oracles::{oracle_influence_within, InfluenceMode};
            let seeds: Vec<UserId> = seeds.into_iter().filter(|&u| (u as usize) < g.num_users()).collect();
            let want = oracle_influence_within(&g, &seeds, 2, InfluenceMode::Exact).unwrap().0;
            prop_assert!((local_influence_2hop(&g, &seeds) - want).abs() < 1e-9);
        }
    }
}
