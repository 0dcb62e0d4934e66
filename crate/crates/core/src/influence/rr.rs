//! Reverse-reachable sets over the heterogeneous graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::UserId;

use super::graph::HeterogeneousGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RrMode {
    /// A candidate joins when any of its users reaches the root.
    Full,
    /// A candidate joins only when all of its users that reach the root need
    /// at least three live hops to do so.
    Beyond2Hop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrSet {
    pub root: UserId,
    /// Candidate indices, sorted.
    pub members: Vec<u32>,
    pub mode: RrMode,
}

/// Reusable buffers for reverse BFS.
pub struct Sampler {
    stamp: u32,
    seen: Vec<u32>,
    hops: Vec<u32>,
    queue: Vec<UserId>,
    best: Vec<(u32, u32)>,
}

impl Sampler {
    pub fn new(users: usize) -> Self {
        Sampler {
            stamp: 0,
            seen: vec![0; users],
            hops: vec![0; users],
            queue: Vec::new(),
            best: Vec::new(),
        }
    }

    pub fn sample(
        &mut self,
        g: &HeterogeneousGraph<'_>,
        mode: RrMode,
        rng: &mut impl Rng,
    ) -> RrSet {
        let root = rng.random_range(0..g.num_users() as UserId);
        let members = if g.is_reachable(root) {
            self.reverse_bfs(g, mode, root, rng)
        } else {
            Vec::new()
        };
        RrSet {
            root,
            members,
            mode,
        }
    }

    fn reverse_bfs(
        &mut self,
        g: &HeterogeneousGraph<'_>,
        mode: RrMode,
        root: UserId,
        rng: &mut impl Rng,
    ) -> Vec<u32> {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        self.queue.clear();
        self.best.clear();
        self.queue.push(root);
        self.seen[root as usize] = stamp;
        self.hops[root as usize] = 0;
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            let h = self.hops[v as usize];
            for &c in g.candidates_of(v) {
                self.best.push((c, h));
            }
            for &(u, w) in g.social.in_edges(v) {
                if self.seen[u as usize] != stamp && rng.random::<f64>() < w {
                    self.seen[u as usize] = stamp;
                    self.hops[u as usize] = h + 1;
                    self.queue.push(u);
                }
            }
        }
        // BFS order makes the first hop count seen per candidate its minimum.
        self.best.sort_by_key(|e| e.0);
        self.best.dedup_by_key(|e| e.0);
        self.best
            .iter()
            .filter(|e| mode == RrMode::Full || e.1 >= 3)
            .map(|e| e.0)
            .collect()
    }
}

/// One RR set drawn with `rng`.
pub fn generate_rr_set(g: &HeterogeneousGraph<'_>, mode: RrMode, rng: &mut impl Rng) -> RrSet {
    Sampler::new(g.num_users()).sample(g, mode, rng)
}

/// A growing collection of RR sets. Set `i` is drawn from its own stream of a
/// seeded generator, so contents never depend on thread count or on how the
/// collection was grown.
#[derive(Debug, Clone)]
pub struct RrCollection {
    pub mode: RrMode,
    pub seed: u64,
    offsets: Vec<usize>,
    items: Vec<u32>,
    cover: Vec<Vec<u32>>,
}

impl RrCollection {
    pub fn new(mode: RrMode, num_candidates: usize, seed: u64) -> Self {
        RrCollection {
            mode,
            seed,
            offsets: vec![0],
            items: Vec::new(),
            cover: vec![Vec::new(); num_candidates],
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn set(&self, i: usize) -> &[u32] {
        &self.items[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Indices of the sets containing candidate `c`, ascending.
    pub fn covering(&self, c: u32) -> &[u32] {
        &self.cover[c as usize]
    }

    /// Draws sets until the collection holds `target`.
    pub fn grow_to(&mut self, g: &HeterogeneousGraph<'_>, target: usize) {
        let start = self.len();
        if target <= start {
            return;
        }
        let (mode, seed, users) = (self.mode, self.seed, g.num_users());
        let sets: Vec<Vec<u32>> = (start..target)
            .into_par_iter()
            .map_init(
                || Sampler::new(users),
                |s, i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    s.sample(g, mode, &mut rng).members
                },
            )
            .collect();
        for (j, set) in sets.into_iter().enumerate() {
            let idx = (start + j) as u32;
            for &c in &set {
                self.cover[c as usize].push(idx);
            }
            self.items.extend(set);
            self.offsets.push(self.items.len());
        }
    }

    /// `Lambda_R(set)`: number of RR sets meeting `set`.
    pub fn coverage(&self, set: &[u32]) -> usize {
        let mut hit = vec![false; self.len()];
        let mut n = 0;
        for &c in set {
            for &r in self.covering(c) {
                if !hit[r as usize] {
                    hit[r as usize] = true;
                    n += 1;
                }
            }
        }
        n
    }

    /// `coverage * num_users / len`, or 0 for an empty collection.
    pub fn scaled(&self, covered: usize, num_users: usize) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            covered as f64 * num_users as f64 / self.len() as f64
        }
    }
}

#[derive(PartialEq)]
struct Cand(f64, u32, usize);

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Lazy greedy for a monotone submodular objective. Picks the same items as
/// plain greedy with ties going to the smaller index, and always returns
/// `min(b, candidates)` items.
pub fn lazy_greedy<S>(
    candidates: &[u32],
    b: usize,
    state: &mut S,
    gain: impl Fn(&S, u32) -> f64,
    mut commit: impl FnMut(&mut S, u32),
) -> Vec<u32> {
    let mut heap: BinaryHeap<Cand> = candidates
        .iter()
        .map(|&c| Cand(f64::INFINITY, c, usize::MAX))
        .collect();
    let mut picked = Vec::new();
    while picked.len() < b {
        let Some(Cand(_, c, round)) = heap.pop() else {
            break;
        };
        if round == picked.len() {
            commit(state, c);
            picked.push(c);
        } else {
            heap.push(Cand(gain(state, c), c, picked.len()));
        }
    }
    picked
}

pub(crate) struct Covered<'r> {
    r: &'r RrCollection,
    hit: Vec<bool>,
}

impl<'r> Covered<'r> {
    pub(crate) fn new(r: &'r RrCollection) -> Self {
        Covered {
            r,
            hit: vec![false; r.len()],
        }
    }

    pub(crate) fn gain(&self, c: u32) -> usize {
        self.r
            .covering(c)
            .iter()
            .filter(|&&i| !self.hit[i as usize])
            .count()
    }

    pub(crate) fn take(&mut self, c: u32) -> usize {
        let mut n = 0;
        for &i in self.r.covering(c) {
            if !self.hit[i as usize] {
                self.hit[i as usize] = true;
                n += 1;
            }
        }
        n
    }
}

/// Greedy max coverage over `candidates`.
pub fn greedy_max_coverage(r: &RrCollection, candidates: &[u32], b: usize) -> Vec<u32> {
    let mut st = Covered {
        r,
        hit: vec![false; r.len()],
    };
    lazy_greedy(
        candidates,
        b,
        &mut st,
        |s, c| s.gain(c) as f64,
        |s, c| {
            s.take(c);
        },
    )
}

/// Upper bound on the best coverage of any `b` candidates: the smallest of
/// `cov(S_i) + (b largest marginals w.r.t. S_i)` over greedy prefixes `S_i`,
/// and `cov(S_b) / (1 - 1/e)`.
pub fn upper_coverage(r: &RrCollection, candidates: &[u32], b: usize) -> f64 {
    let mut st = Covered {
        r,
        hit: vec![false; r.len()],
    };
    let mut chosen: Vec<u32> = Vec::new();
    let mut covered = 0usize;
    let mut best = f64::INFINITY;
    for step in 0..=b {
        let mut gains: Vec<usize> = candidates
            .iter()
            .filter(|c| !chosen.contains(c))
            .map(|&c| st.gain(c))
            .collect();
        gains.sort_unstable_by(|a, b| b.cmp(a));
        let top: usize = gains.iter().take(b).sum();
        best = best.min((covered + top) as f64);
        if step == b {
            break;
        }
        let next = candidates
            .iter()
            .filter(|c| !chosen.contains(c))
            .map(|&c| (st.gain(c), c))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        match next {
            Some((_, c)) => {
                covered += st.take(c);
                chosen.push(c);
            }
            None => break,
        }
    }
    best.min(covered as f64 / (1.0 - (-1.0f64).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::SocialNetwork;

    fn collection(sets: &[&[u32]], n: usize) -> RrCollection {
        let mut r = RrCollection::new(RrMode::Full, n, 0);
        for (i, s) in sets.iter().enumerate() {
            for &c in *s {
                r.cover[c as usize].push(i as u32);
            }
            r.items.extend_from_slice(s);
            r.offsets.push(r.items.len());
        }
        r
    }

    fn best_coverage(r: &RrCollection, n: u32, b: usize) -> usize {
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == b)
            .map(|m| r.coverage(&(0..n).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>()))
            .max()
            .unwrap()
    }

    #[test]
    fn coverage_counts_sets_once() {
        let r = collection(&[&[0, 1], &[1], &[], &[2]], 3);
        assert_eq!(r.len(), 4);
        assert_eq!(r.coverage(&[]), 0);
        assert_eq!(r.coverage(&[0, 1]), 2);
        assert_eq!(r.coverage(&[0, 1, 2]), 3);
    }

    proptest::proptest! {
        #[test]
        fn coverage_is_monotone_submodular(
            sets in proptest::collection::vec(proptest::collection::btree_set(0u32..6, 0..4), 0..25),
            a in proptest::collection::btree_set(0u32..6, 0..4),
            b in proptest::collection::btree_set(0u32..6, 0..4),
            x in 0u32..6,
        ) {
            let sets: Vec<Vec<u32>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
            let refs: Vec<&[u32]> = sets.iter().map(|s| s.as_slice()).collect();
            let r = collection(&refs, 6);
            let a: Vec<u32> = a.into_iter().collect();
            let ab: Vec<u32> = a.iter().chain(b.iter()).copied().collect();
            let with = |s: &[u32]| r.coverage(&[s, &[x]].concat());
            proptest::prop_assert!(r.coverage(&ab) <= r.coverage(&a) + r.coverage(&b.iter().copied().collect::<Vec<_>>()));
            proptest::prop_assert!(r.coverage(&a) <= r.coverage(&ab));
            proptest::prop_assert!(with(&a) - r.coverage(&a) >= with(&ab) - r.coverage(&ab));
        }
    }

    #[test]
    fn ties_go_to_smaller_index() {
        let r = collection(&[&[0], &[1], &[2], &[3]], 4);
        assert_eq!(greedy_max_coverage(&r, &[3, 2, 1, 0], 2), vec![0, 1]);
        assert_eq!(greedy_max_coverage(&r, &[0, 1], 5), vec![0, 1]);
    }

    #[test]
    fn lazy_greedy_matches_plain_greedy_and_bounds_hold() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(1..8u32);
            let sets: Vec<Vec<u32>> = (0..rng.random_range(0..30))
                .map(|_| (0..n).filter(|_| rng.random_bool(0.3)).collect())
                .collect();
            let refs: Vec<&[u32]> = sets.iter().map(|s| s.as_slice()).collect();
            let r = collection(&refs, n as usize);
            let b = rng.random_range(1..=n as usize);
            let cands: Vec<u32> = (0..n).collect();
            let mut plain = Vec::new();
            for _ in 0..b {
                let base = r.coverage(&plain);
                let c = cands
                    .iter()
                    .filter(|c| !plain.contains(*c))
                    .max_by(|x, y| {
                        let gx = r.coverage(&[plain.clone(), vec![**x]].concat()) - base;
                        let gy = r.coverage(&[plain.clone(), vec![**y]].concat()) - base;
                        gx.cmp(&gy).then(y.cmp(x))
                    })
                    .copied()
                    .unwrap();
                plain.push(c);
            }
            let lazy = greedy_max_coverage(&r, &cands, b);
            assert_eq!(lazy, plain);
            let opt = best_coverage(&r, n, b);
            assert!(r.coverage(&lazy) as f64 >= (1.0 - (-1.0f64).exp()) * opt as f64);
            assert!(upper_coverage(&r, &cands, b) >= opt as f64);
        }
    }

    #[test]
    fn beyond_two_hops_drops_near_candidates() {
        // 0 -> 1 -> 2 -> 3 with certain edges; candidate 0 owns user 0, candidate 1 owns user 2.
        let g = SocialNetwork::new(4, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let h = HeterogeneousGraph::new(&g, vec![10, 11], vec![vec![0], vec![2]]);
        let mut s = Sampler::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let full = s.sample(&h, RrMode::Full, &mut rng);
            let want: Vec<u32> = match full.root {
                0 | 1 => vec![0],
                _ => vec![0, 1],
            };
            assert_eq!(full.members, want);
            let far = s.sample(&h, RrMode::Beyond2Hop, &mut rng);
            let want: Vec<u32> = if far.root == 3 { vec![0] } else { vec![] };
            assert_eq!(far.members, want);
        }
    }

    #[test]
    fn growth_is_independent_of_steps() {
        let g = SocialNetwork::new(5, vec![(0, 1, 0.5), (1, 2, 0.5), (3, 4, 0.7), (4, 0, 0.2)])
            .unwrap();
        let h = HeterogeneousGraph::new(&g, vec![0, 1], vec![vec![0, 3], vec![2]]);
        let mut a = RrCollection::new(RrMode::Full, 2, 42);
        a.grow_to(&h, 1000);
        let mut b = RrCollection::new(RrMode::Full, 2, 42);
        b.grow_to(&h, 300);
        b.grow_to(&h, 1000);
        assert_eq!(a.items, b.items);
        assert_eq!(a.cover, b.cover);
    }
}
