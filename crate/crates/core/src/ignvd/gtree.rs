//! Balanced hierarchical partition of the road network.
//!
//! Each node's vertex set is split into `fanout` parts by recursive bisection.
//! A bisection grows a BFS region from a pseudo-peripheral vertex up to the
//! target size and then improves the cut with pairwise boundary swaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{RoadNetwork, VertexId};

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTreeNode {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: u32,
    /// Sorted.
    pub vertices: Vec<VertexId>,
    /// Vertices with an edge leaving the node, sorted. Empty for the root.
    pub borders: Vec<VertexId>,
}

impl GTreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTree {
    pub fanout: usize,
    pub leaf_capacity: usize,
    nodes: Vec<GTreeNode>,
    leaf_of: Vec<NodeId>,
}

impl GTree {
    pub const ROOT: NodeId = 0;

    pub fn build(road: &RoadNetwork, fanout: usize, leaf_capacity: usize) -> Result<Self> {
        if fanout < 2 {
            return Err(Error::Param("fanout must be at least 2".into()));
        }
        if leaf_capacity == 0 {
            return Err(Error::Param("leaf capacity must be positive".into()));
        }
        let n = road.num_vertices();
        let mut builder = Builder {
            road,
            mark: vec![0; n],
            stamp: 0,
        };
        let mut nodes = vec![GTreeNode {
            parent: None,
            children: Vec::new(),
            depth: 0,
            vertices: (0..n as VertexId).collect(),
            borders: Vec::new(),
        }];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let len = nodes[id].vertices.len();
            if len <= leaf_capacity {
                continue;
            }
            let parts = builder.split(nodes[id].vertices.clone(), fanout.min(len));
            for mut part in parts {
                part.sort_unstable();
                let borders = builder.borders(&part);
                let child = nodes.len();
                nodes.push(GTreeNode {
                    parent: Some(id as NodeId),
                    children: Vec::new(),
                    depth: nodes[id].depth + 1,
                    vertices: part,
                    borders,
                });
                nodes[id].children.push(child as NodeId);
                stack.push(child);
            }
        }
        let mut leaf_of = vec![0; n];
        for (id, node) in nodes.iter().enumerate() {
            if node.is_leaf() {
                for &v in &node.vertices {
                    leaf_of[v as usize] = id as NodeId;
                }
            }
        }
        Ok(GTree {
            fanout,
            leaf_capacity,
            nodes,
            leaf_of,
        })
    }

    pub fn nodes(&self) -> &[GTreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &GTreeNode {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_of(&self, v: VertexId) -> NodeId {
        self.leaf_of[v as usize]
    }

    /// True when `anc` is `node` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, anc: NodeId, mut node: NodeId) -> bool {
        loop {
            if node == anc {
                return true;
            }
            match self.nodes[node as usize].parent {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as NodeId).filter(|&i| self.nodes[i as usize].is_leaf())
    }
}

struct Builder<'a> {
    road: &'a RoadNetwork,
    mark: Vec<u32>,
    stamp: u32,
}

const IN_SET: u32 = 0;
const SIDE_A: u32 = 1;
const SIDE_B: u32 = 2;

impl<'a> Builder<'a> {
    /// Marks `set` with a fresh stamp; returns the base value for side tags.
    fn mark_set(&mut self, set: &[VertexId]) -> u32 {
        self.stamp += 4;
        for &v in set {
            self.mark[v as usize] = self.stamp + IN_SET;
        }
        self.stamp
    }

    fn in_set(&self, base: u32, v: VertexId) -> bool {
        let m = self.mark[v as usize];
        m >= base && m < base + 4
    }

    fn borders(&mut self, part: &[VertexId]) -> Vec<VertexId> {
        let base = self.mark_set(part);
        part.iter()
            .copied()
            .filter(|&v| self.road.neighbors(v).any(|(w, _)| !self.in_set(base, w)))
            .collect()
    }

    fn split(&mut self, set: Vec<VertexId>, parts: usize) -> Vec<Vec<VertexId>> {
        if parts <= 1 || set.len() <= 1 {
            return vec![set];
        }
        let left_parts = parts / 2;
        let target = set.len() * left_parts / parts;
        let (a, b) = self.bisect(&set, target.max(1));
        let mut out = self.split(a, left_parts);
        out.extend(self.split(b, parts - left_parts));
        out
    }

    fn bfs_far(&mut self, base: u32, start: VertexId) -> VertexId {
        let mut seen = std::collections::HashSet::new();
        let mut queue = std::collections::VecDeque::new();
        seen.insert(start);
        queue.push_back(start);
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for (w, _) in self.road.neighbors(v) {
                if self.in_set(base, w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        last
    }

    fn bisect(&mut self, set: &[VertexId], target: usize) -> (Vec<VertexId>, Vec<VertexId>) {
        let base = self.mark_set(set);
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        let seed = self.bfs_far(base, sorted[0]);
        let seed = self.bfs_far(base, seed);

        // Region growing.
        let mut grown = 0usize;
        let mut queue = std::collections::VecDeque::new();
        let mut next_unseen = 0usize;
        let tag = |b: &mut Self, v: VertexId, t: u32| b.mark[v as usize] = base + t;
        tag(self, seed, SIDE_A);
        queue.push_back(seed);
        grown += 1;
        while grown < target {
            let v = match queue.pop_front() {
                Some(v) => v,
                None => {
                    while self.mark[sorted[next_unseen] as usize] != base + IN_SET {
                        next_unseen += 1;
                    }
                    let v = sorted[next_unseen];
                    tag(self, v, SIDE_A);
                    grown += 1;
                    queue.push_back(v);
                    continue;
                }
            };
            for (w, _) in self.road.neighbors(v) {
                if grown >= target {
                    break;
                }
                if self.mark[w as usize] == base + IN_SET {
                    tag(self, w, SIDE_A);
                    grown += 1;
                    queue.push_back(w);
                }
            }
        }
        for &v in set {
            if self.mark[v as usize] == base + IN_SET {
                self.mark[v as usize] = base + SIDE_B;
            }
        }

        self.refine(base, set);

        let (mut a, mut b) = (Vec::new(), Vec::new());
        for &v in &sorted {
            if self.mark[v as usize] == base + SIDE_A {
                a.push(v);
            } else {
                b.push(v);
            }
        }
        (a, b)
    }

    /// Gain of moving `v` to the other side: external minus internal edges.
    fn gain(&self, base: u32, v: VertexId) -> i64 {
        let side = self.mark[v as usize];
        let mut g = 0i64;
        for (w, _) in self.road.neighbors(v) {
            if !self.in_set(base, w) || w == v {
                continue;
            }
            if self.mark[w as usize] == side {
                g -= 1;
            } else {
                g += 1;
            }
        }
        g
    }

    /// Size-preserving swaps of the best boundary vertex pair while the cut shrinks.
    fn refine(&mut self, base: u32, set: &[VertexId]) {
        let max_swaps = set.len().min(200);
        for _ in 0..max_swaps {
            let mut best = [(i64::MIN, VertexId::MAX); 2];
            for &v in set {
                let side = self.mark[v as usize];
                let on_cut = self
                    .road
                    .neighbors(v)
                    .any(|(w, _)| self.in_set(base, w) && self.mark[w as usize] != side);
                if !on_cut {
                    continue;
                }
                let g = self.gain(base, v);
                let s = (self.mark[v as usize] - base - SIDE_A) as usize;
                if g > best[s].0 || (g == best[s].0 && v < best[s].1) {
                    best[s] = (g, v);
                }
            }
            let ((ga, a), (gb, b)) = (best[0], best[1]);
            if a == VertexId::MAX || b == VertexId::MAX {
                return;
            }
            let adjacent = self.road.neighbors(a).filter(|&(w, _)| w == b).count() as i64;
            if ga + gb - 2 * adjacent <= 0 {
                return;
            }
            self.mark[a as usize] = base + SIDE_B;
            self.mark[b as usize] = base + SIDE_A;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: u32, h: u32) -> RoadNetwork {
        let mut coords = Vec::new();
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                coords.push((x as f64, y as f64));
                let v = y * w + x;
                if x + 1 < w {
                    edges.push((v, v + 1, 1.0));
                }
                if y + 1 < h {
                    edges.push((v, v + w, 1.0));
                }
            }
        }
        RoadNetwork::new(coords, edges).unwrap()
    }

    #[test]
    fn four_by_four_grid_gives_four_leaves_of_four() {
        let t = GTree::build(&grid(4, 4), 4, 4).unwrap();
        let leaves: Vec<_> = t.leaves().collect();
        assert_eq!(leaves.len(), 4);
        let mut all: Vec<VertexId> = Vec::new();
        for l in leaves {
            assert_eq!(t.node(l).vertices.len(), 4);
            all.extend(&t.node(l).vertices);
        }
        all.sort_unstable();
        assert_eq!(all, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn children_partition_their_parent() {
        let road = grid(13, 9);
        let t = GTree::build(&road, 4, 7).unwrap();
        for node in t.nodes() {
            if node.is_leaf() {
                assert!(node.vertices.len() <= 7);
                continue;
            }
            let mut union: Vec<VertexId> = node
                .children
                .iter()
                .flat_map(|&c| t.node(c).vertices.iter().copied())
                .collect();
            union.sort_unstable();
            assert_eq!(union, node.vertices);
        }
        for v in 0..road.num_vertices() as VertexId {
            assert!(t.node(t.leaf_of(v)).contains(v));
        }
    }

    #[test]
    fn borders_are_exactly_vertices_with_outside_edges() {
        let road = grid(8, 8);
        let t = GTree::build(&road, 2, 8).unwrap();
        assert!(t.node(GTree::ROOT).borders.is_empty());
        for node in t.nodes().iter().skip(1) {
            let expect: Vec<VertexId> = node
                .vertices
                .iter()
                .copied()
                .filter(|&v| road.neighbors(v).any(|(w, _)| !node.contains(w)))
                .collect();
            assert_eq!(node.borders, expect);
        }
    }

    #[test]
    fn disconnected_graph_still_partitions() {
        let road = RoadNetwork::new(vec![(0.0, 0.0); 10], vec![(0, 1, 1.0), (5, 6, 1.0)]).unwrap();
        let t = GTree::build(&road, 2, 3).unwrap();
        let total: usize = t.leaves().map(|l| t.node(l).vertices.len()).sum();
        assert_eq!(total, 10);
    }
}
