//! Exact network distances: bidirectional Dijkstra and pruned hub labels.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::model::{Location, RoadNetwork, VertexId};

/// Returned for disconnected pairs.
pub const INFINITY: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HeapItem {
    pub dist: f64,
    pub vertex: VertexId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra. `sources` carries initial distances. Vertices for
/// which `allowed` is false are never entered.
pub fn dijkstra_from(
    road: &RoadNetwork,
    sources: &[(VertexId, f64)],
    allowed: Option<&dyn Fn(VertexId) -> bool>,
) -> Vec<f64> {
    let mut dist = vec![INFINITY; road.num_vertices()];
    let mut heap = BinaryHeap::new();
    for &(s, d) in sources {
        if d < dist[s as usize] {
            dist[s as usize] = d;
            heap.push(HeapItem { dist: d, vertex: s });
        }
    }
    while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for (w, len) in road.neighbors(v) {
            if let Some(ok) = allowed {
                if !ok(w) {
                    continue;
                }
            }
            let nd = d + len;
            if nd < dist[w as usize] {
                dist[w as usize] = nd;
                heap.push(HeapItem {
                    dist: nd,
                    vertex: w,
                });
            }
        }
    }
    dist
}

#[derive(Default)]
struct Scratch {
    dist: [Vec<f64>; 2],
    stamp: [Vec<u32>; 2],
    epoch: u32,
}

impl Scratch {
    fn reset(&mut self, n: usize) {
        for side in 0..2 {
            if self.dist[side].len() < n {
                self.dist[side].resize(n, INFINITY);
                self.stamp[side].resize(n, 0);
            }
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            for side in 0..2 {
                self.stamp[side].iter_mut().for_each(|s| *s = 0);
            }
            self.epoch = 1;
        }
    }

    #[inline]
    fn get(&self, side: usize, v: VertexId) -> f64 {
        if self.stamp[side][v as usize] == self.epoch {
            self.dist[side][v as usize]
        } else {
            INFINITY
        }
    }

    #[inline]
    fn set(&mut self, side: usize, v: VertexId, d: f64) {
        self.stamp[side][v as usize] = self.epoch;
        self.dist[side][v as usize] = d;
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

/// Point-to-point distance by bidirectional Dijkstra.
pub fn bidirectional_dijkstra(road: &RoadNetwork, s: VertexId, t: VertexId) -> f64 {
    if s == t {
        return 0.0;
    }
    SCRATCH.with(|cell| {
        let mut sc = cell.borrow_mut();
        sc.reset(road.num_vertices());
        let mut heaps = [BinaryHeap::new(), BinaryHeap::new()];
        sc.set(0, s, 0.0);
        sc.set(1, t, 0.0);
        heaps[0].push(HeapItem {
            dist: 0.0,
            vertex: s,
        });
        heaps[1].push(HeapItem {
            dist: 0.0,
            vertex: t,
        });
        let mut best = INFINITY;
        loop {
            let top = |h: &BinaryHeap<HeapItem>| h.peek().map_or(INFINITY, |x| x.dist);
            let (tf, tb) = (top(&heaps[0]), top(&heaps[1]));
            if tf + tb >= best || (tf == INFINITY && tb == INFINITY) {
                return best;
            }
            let side = if tf <= tb { 0 } else { 1 };
            let HeapItem { dist: d, vertex: v } = heaps[side].pop().expect("non-empty heap");
            if d > sc.get(side, v) {
                continue;
            }
            for (w, len) in road.neighbors(v) {
                let nd = d + len;
                if nd < sc.get(side, w) {
                    sc.set(side, w, nd);
                    heaps[side].push(HeapItem {
                        dist: nd,
                        vertex: w,
                    });
                }
                let other = sc.get(1 - side, w);
                if nd + other < best {
                    best = nd + other;
                }
            }
        }
    })
}

/// Shortest-path trees sampled when ranking hubs.
const ORDER_SAMPLES: usize = 64;

/// Vertices by descending approximate betweenness: subtree sizes summed over
/// shortest-path trees grown from `samples` evenly spaced roots. Ties by id.
pub fn betweenness_order(road: &RoadNetwork, samples: usize) -> Vec<VertexId> {
    let n = road.num_vertices();
    let mut score = vec![0.0f64; n];
    let mut dist = vec![INFINITY; n];
    let mut parent = vec![VertexId::MAX; n];
    let mut settled = Vec::with_capacity(n);
    let mut sub = vec![0.0f64; n];
    let mut heap = BinaryHeap::new();
    for s in 0..samples.min(n) {
        let root = (s * n / samples.min(n)) as VertexId;
        dist[root as usize] = 0.0;
        heap.push(HeapItem {
            dist: 0.0,
            vertex: root,
        });
        while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            settled.push(v);
            for (w, len) in road.neighbors(v) {
                let nd = d + len;
                if nd < dist[w as usize] {
                    dist[w as usize] = nd;
                    parent[w as usize] = v;
                    heap.push(HeapItem {
                        dist: nd,
                        vertex: w,
                    });
                }
            }
        }
        for &v in &settled {
            sub[v as usize] = 1.0;
        }
        for &v in settled.iter().rev() {
            let p = parent[v as usize];
            if p != VertexId::MAX {
                sub[p as usize] += sub[v as usize];
            }
            score[v as usize] += sub[v as usize];
        }
        for v in settled.drain(..) {
            dist[v as usize] = INFINITY;
            parent[v as usize] = VertexId::MAX;
        }
    }
    let mut order: Vec<VertexId> = (0..n as VertexId).collect();
    order.sort_by(|&a, &b| {
        score[b as usize]
            .total_cmp(&score[a as usize])
            .then(a.cmp(&b))
    });
    order
}

/// Pruned landmark labels: exact distance queries by merging two sorted labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HubLabels {
    /// Vertex at each rank.
    order: Vec<VertexId>,
    offsets: Vec<u32>,
    hubs: Vec<u32>,
    dists: Vec<f64>,
}

impl HubLabels {
    /// Builds labels with vertices ranked by [`betweenness_order`].
    pub fn build(road: &RoadNetwork) -> Self {
        Self::build_with_order(road, &betweenness_order(road, ORDER_SAMPLES))
    }

    /// Builds labels processing vertices in `order`. Deterministic given the order.
    pub fn build_with_order(road: &RoadNetwork, order: &[VertexId]) -> Self {
        let n = road.num_vertices();
        assert_eq!(
            order.len(),
            n,
            "order must be a permutation of the vertices"
        );
        let mut labels: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let mut tmp = vec![INFINITY; n];
        let mut dist = vec![INFINITY; n];
        let mut touched = Vec::new();
        let mut heap = BinaryHeap::new();
        for (rank, &root) in order.iter().enumerate() {
            for &(h, d) in &labels[root as usize] {
                tmp[h as usize] = d;
            }
            dist[root as usize] = 0.0;
            touched.push(root);
            heap.push(HeapItem {
                dist: 0.0,
                vertex: root,
            });
            while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
                if d > dist[v as usize] {
                    continue;
                }
                let covered = labels[v as usize]
                    .iter()
                    .any(|&(h, dh)| tmp[h as usize] + dh <= d);
                if covered {
                    continue;
                }
                labels[v as usize].push((rank as u32, d));
                for (w, len) in road.neighbors(v) {
                    let nd = d + len;
                    if nd < dist[w as usize] {
                        if dist[w as usize] == INFINITY {
                            touched.push(w);
                        }
                        dist[w as usize] = nd;
                        heap.push(HeapItem {
                            dist: nd,
                            vertex: w,
                        });
                    }
                }
            }
            for &(h, _) in &labels[root as usize] {
                tmp[h as usize] = INFINITY;
            }
            for v in touched.drain(..) {
                dist[v as usize] = INFINITY;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u32);
        let mut hubs = Vec::new();
        let mut dists = Vec::new();
        for label in &labels {
            for &(h, d) in label {
                hubs.push(h);
                dists.push(d);
            }
            offsets.push(hubs.len() as u32);
        }
        HubLabels {
            order: order.to_vec(),
            offsets,
            hubs,
            dists,
        }
    }

    pub fn order(&self) -> &[VertexId] {
        &self.order
    }

    pub fn average_label_size(&self) -> f64 {
        self.hubs.len() as f64 / (self.offsets.len() - 1).max(1) as f64
    }

    #[inline]
    pub fn query(&self, a: VertexId, b: VertexId) -> f64 {
        if a == b {
            return 0.0;
        }
        let (la, ha) = (
            self.offsets[a as usize] as usize,
            self.offsets[a as usize + 1] as usize,
        );
        let (lb, hb) = (
            self.offsets[b as usize] as usize,
            self.offsets[b as usize + 1] as usize,
        );
        let (mut i, mut j) = (la, lb);
        let mut best = INFINITY;
        while i < ha && j < hb {
            match self.hubs[i].cmp(&self.hubs[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let d = self.dists[i] + self.dists[j];
                    if d < best {
                        best = d;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DistanceStrategy {
    #[default]
    Dijkstra,
    HubLabels,
}

/// Exact network distance oracle over a private copy of the road graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceOracle {
    road: RoadNetwork,
    labels: Option<HubLabels>,
}

impl DistanceOracle {
    pub fn build(road: &RoadNetwork, strategy: DistanceStrategy) -> Self {
        let labels = match strategy {
            DistanceStrategy::Dijkstra => None,
            DistanceStrategy::HubLabels => Some(HubLabels::build(road)),
        };
        DistanceOracle {
            road: road.clone(),
            labels,
        }
    }

    pub fn with_labels(road: &RoadNetwork, labels: HubLabels) -> Self {
        DistanceOracle {
            road: road.clone(),
            labels: Some(labels),
        }
    }

    pub fn strategy(&self) -> DistanceStrategy {
        if self.labels.is_some() {
            DistanceStrategy::HubLabels
        } else {
            DistanceStrategy::Dijkstra
        }
    }

    pub fn road(&self) -> &RoadNetwork {
        &self.road
    }

    pub fn labels(&self) -> Option<&HubLabels> {
        self.labels.as_ref()
    }

    #[inline]
    pub fn vertex_distance(&self, a: VertexId, b: VertexId) -> f64 {
        match &self.labels {
            Some(l) => l.query(a, b),
            None => bidirectional_dijkstra(&self.road, a, b),
        }
    }

    /// Distance between two locations: `offset_a + d(v_a, v_b) + offset_b`,
    /// and zero for identical locations.
    #[inline]
    pub fn shortest_distance(&self, a: &Location, b: &Location) -> f64 {
        if a == b {
            return 0.0;
        }
        a.offset + self.vertex_distance(a.vertex, b.vertex) + b.offset
    }

    /// Distance from a vertex to a location.
    #[inline]
    pub fn vertex_to_location(&self, v: VertexId, b: &Location) -> f64 {
        self.shortest_distance(&Location::at(v), b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(w: u32, h: u32, weight: impl Fn(u32) -> f64) -> RoadNetwork {
        let mut coords = Vec::new();
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                coords.push((x as f64, y as f64));
                let v = y * w + x;
                if x + 1 < w {
                    edges.push((v, v + 1, weight(edges.len() as u32)));
                }
                if y + 1 < h {
                    edges.push((v, v + w, weight(edges.len() as u32)));
                }
            }
        }
        RoadNetwork::new(coords, edges).unwrap()
    }

    #[test]
    fn unit_grid_corner_to_corner() {
        let road = grid(4, 4, |_| 1.0);
        let o = DistanceOracle::build(&road, DistanceStrategy::Dijkstra);
        assert_eq!(o.vertex_distance(0, 15), 6.0);
        let h = DistanceOracle::build(&road, DistanceStrategy::HubLabels);
        assert_eq!(h.vertex_distance(0, 15), 6.0);
    }

    #[test]
    fn disconnected_pair_is_infinite() {
        let road = RoadNetwork::new(vec![(0.0, 0.0); 3], vec![(0, 1, 2.0)]).unwrap();
        for s in [DistanceStrategy::Dijkstra, DistanceStrategy::HubLabels] {
            let o = DistanceOracle::build(&road, s);
            assert_eq!(o.vertex_distance(0, 2), INFINITY);
            assert_eq!(o.vertex_distance(0, 1), 2.0);
        }
    }

    #[test]
    fn identical_locations_are_zero_and_offsets_add() {
        let road = grid(2, 1, |_| 5.0);
        let o = DistanceOracle::build(&road, DistanceStrategy::Dijkstra);
        let a = Location {
            vertex: 0,
            offset: 1.5,
        };
        let b = Location {
            vertex: 1,
            offset: 0.5,
        };
        assert_eq!(o.shortest_distance(&a, &a), 0.0);
        assert_eq!(o.shortest_distance(&a, &b), 7.0);
        assert_eq!(o.shortest_distance(&b, &a), 7.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn strategies_agree_with_plain_dijkstra(
            w in 2u32..7, h in 2u32..7, seed in 0u64..1000, pairs in prop::collection::vec((0u32..49, 0u32..49), 1..20)
        ) {
            let road = grid(w, h, |i| 1.0 + ((seed + i as u64 * 7919) % 13) as f64);
            let n = w * h;
            let dij = DistanceOracle::build(&road, DistanceStrategy::Dijkstra);
            let hl = DistanceOracle::build(&road, DistanceStrategy::HubLabels);
            for (a, b) in pairs {
                let (a, b) = (a % n, b % n);
                let reference = dijkstra_from(&road, &[(a, 0.0)], None)[b as usize];
                prop_assert_eq!(dij.vertex_distance(a, b), reference);
                prop_assert_eq!(hl.vertex_distance(a, b), reference);
                prop_assert_eq!(hl.vertex_distance(a, b), hl.vertex_distance(b, a));
            }
        }

        #[test]
        fn triangle_inequality(seed in 0u64..1000, a in 0u32..25, b in 0u32..25, c in 0u32..25) {
            let road = grid(5, 5, |i| 1.0 + ((seed * 31 + i as u64 * 17) % 9) as f64);
            let o = DistanceOracle::build(&road, DistanceStrategy::HubLabels);
            prop_assert!(o.vertex_distance(a, c) <= o.vertex_distance(a, b) + o.vertex_distance(b, c) + 1e-9);
        }
    }
}
