//! Network Voronoi diagram of the POIs carrying one keyword.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::geo::{GeoSocialDataset, KeywordId, PoiId, VertexId};

pub const NO_OWNER: PoiId = PoiId::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nvd {
    pub keyword: KeywordId,
    /// Generator POIs, sorted.
    pub generators: Vec<PoiId>,
    /// Owning POI of each vertex, `NO_OWNER` when no generator is reachable.
    owner: Vec<PoiId>,
    /// Distance from each vertex to its owner.
    dist: Vec<f64>,
    /// Adjacent cells per generator, aligned with `generators`, each sorted.
    adjacency: Vec<Vec<PoiId>>,
}

#[derive(PartialEq)]
struct Item {
    dist: f64,
    owner: PoiId,
    vertex: VertexId,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.owner.cmp(&self.owner))
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Nvd {
    /// Multi-source Dijkstra from the generators. Ties in distance go to the
    /// smaller POI id; cells are adjacent when a road edge joins them or when
    /// one generator sits on a vertex owned by the other.
    pub fn build(ds: &GeoSocialDataset, keyword: KeywordId, generators: &[PoiId]) -> Self {
        let road = &ds.road;
        let n = road.num_vertices();
        let mut owner = vec![NO_OWNER; n];
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        let better = |d: f64, o: PoiId, cd: f64, co: PoiId| d < cd || (d == cd && o < co);
        for &p in generators {
            let loc = ds.pois[p as usize].loc;
            let v = loc.vertex as usize;
            if better(loc.offset, p, dist[v], owner[v]) {
                dist[v] = loc.offset;
                owner[v] = p;
                heap.push(Item {
                    dist: loc.offset,
                    owner: p,
                    vertex: loc.vertex,
                });
            }
        }
        while let Some(Item {
            dist: d,
            owner: o,
            vertex: v,
        }) = heap.pop()
        {
            if d != dist[v as usize] || o != owner[v as usize] {
                continue;
            }
            for (w, len) in road.neighbors(v) {
                let nd = d + len;
                if better(nd, o, dist[w as usize], owner[w as usize]) {
                    dist[w as usize] = nd;
                    owner[w as usize] = o;
                    heap.push(Item {
                        dist: nd,
                        owner: o,
                        vertex: w,
                    });
                }
            }
        }
        let mut generators = generators.to_vec();
        generators.sort_unstable();
        let mut adj: Vec<BTreeSet<PoiId>> = vec![BTreeSet::new(); generators.len()];
        let slot = |p: PoiId| generators.binary_search(&p).expect("generator");
        for &(a, b, _) in road.edges() {
            let (oa, ob) = (owner[a as usize], owner[b as usize]);
            if oa != ob && oa != NO_OWNER && ob != NO_OWNER {
                adj[slot(oa)].insert(ob);
                adj[slot(ob)].insert(oa);
            }
        }
        // A generator whose own vertex went to another POI has an empty cell;
        // link it to that owner so adjacency walks still reach it.
        for &g in &generators {
            let o = owner[ds.pois[g as usize].loc.vertex as usize];
            if o != g && o != NO_OWNER {
                adj[slot(g)].insert(o);
                adj[slot(o)].insert(g);
            }
        }
        Nvd {
            keyword,
            adjacency: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
            generators,
            owner,
            dist,
        }
    }

    /// Owning POI of `v` and the distance to it.
    #[inline]
    pub fn lookup(&self, v: VertexId) -> Option<(PoiId, f64)> {
        let o = self.owner[v as usize];
        (o != NO_OWNER).then(|| (o, self.dist[v as usize]))
    }

    /// Cells sharing a road edge with the cell of `p`.
    pub fn neighbors(&self, p: PoiId) -> &[PoiId] {
        match self.generators.binary_search(&p) {
            Ok(i) => &self.adjacency[i],
            Err(_) => &[],
        }
    }

    pub fn owners(&self) -> &[PoiId] {
        &self.owner
    }
}
