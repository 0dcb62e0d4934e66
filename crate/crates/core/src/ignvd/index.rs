use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::gtree::{GTree, NodeId};
use super::nvd::Nvd;
use crate::error::{Error, Result};
use crate::geo::{
    manifest_of, DistanceOracle, DistanceStrategy, GeoSocialDataset, HubLabels, KeywordId, PoiId,
    RoadNetwork, UserId, VertexId,
};
use crate::scoring::TermWeightTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub fanout: usize,
    pub leaf_capacity: usize,
    /// Keywords carried by at least this many POIs get a Voronoi diagram.
    pub frequency_threshold: u32,
    pub oracle: DistanceStrategy,
    pub compress: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            fanout: 4,
            leaf_capacity: 64,
            frequency_threshold: 50,
            oracle: DistanceStrategy::Dijkstra,
            compress: true,
        }
    }
}

/// Objects beneath a G-tree node that carry one keyword.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Postings {
    pub pois: Vec<PoiId>,
    pub users: Vec<UserId>,
    /// Largest user-side `TS(t, u)` among `users`.
    pub max_user_weight: f64,
}

/// Keyword to postings for one node, sorted by keyword.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvertedFile {
    entries: Vec<(KeywordId, Postings)>,
}

impl InvertedFile {
    pub fn get(&self, t: KeywordId) -> Option<&Postings> {
        self.entries
            .binary_search_by_key(&t, |e| e.0)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn entries(&self) -> &[(KeywordId, Postings)] {
        &self.entries
    }

    /// Keywords held by at least one user beneath the node.
    pub fn user_keywords(&self) -> impl Iterator<Item = KeywordId> + '_ {
        self.entries
            .iter()
            .filter(|e| !e.1.users.is_empty())
            .map(|e| e.0)
    }

    /// Sorted intersection of the user keywords with `keys` (sorted).
    pub fn user_keywords_in(&self, keys: &[KeywordId]) -> Vec<KeywordId> {
        keys.iter()
            .copied()
            .filter(|&t| self.get(t).is_some_and(|p| !p.users.is_empty()))
            .collect()
    }
}

/// Nearest-generator column for one keyword over a node's key vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NnColumn {
    Plain(Vec<PoiId>),
    Uniform(PoiId),
    Coded { dict: Vec<PoiId>, codes: Vec<u8> },
}

impl NnColumn {
    fn get(&self, i: usize) -> PoiId {
        match self {
            NnColumn::Plain(v) => v[i],
            NnColumn::Uniform(p) => *p,
            NnColumn::Coded { dict, codes } => dict[codes[i] as usize],
        }
    }

    fn compress(&self) -> NnColumn {
        let NnColumn::Plain(v) = self else {
            return self.clone();
        };
        let mut dict: Vec<PoiId> = v.clone();
        dict.sort_unstable();
        dict.dedup();
        if dict.len() == 1 {
            return NnColumn::Uniform(dict[0]);
        }
        if dict.len() > 256 {
            return self.clone();
        }
        let codes = v
            .iter()
            .map(|p| dict.binary_search(p).expect("in dictionary") as u8)
            .collect();
        NnColumn::Coded { dict, codes }
    }

    fn bytes(&self) -> usize {
        match self {
            NnColumn::Plain(v) => 4 * v.len(),
            NnColumn::Uniform(_) => 4,
            NnColumn::Coded { dict, codes } => 4 * dict.len() + codes.len(),
        }
    }
}

/// Nearest generator per (key vertex, frequent keyword) of one node. Key
/// vertices are the borders of internal nodes and all vertices of leaves.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NnMap {
    keys: Vec<VertexId>,
    columns: Vec<(KeywordId, NnColumn)>,
}

impl NnMap {
    pub fn lookup(&self, v: VertexId, t: KeywordId) -> Option<PoiId> {
        let i = self.keys.binary_search(&v).ok()?;
        let c = self.columns.binary_search_by_key(&t, |e| e.0).ok()?;
        let p = self.columns[c].1.get(i);
        (p != super::nvd::NO_OWNER).then_some(p)
    }

    pub fn keys(&self) -> &[VertexId] {
        &self.keys
    }

    pub fn keywords(&self) -> impl Iterator<Item = KeywordId> + '_ {
        self.columns.iter().map(|c| c.0)
    }
}

/// G-tree over the road network, per-node inverted files and nearest-neighbour
/// maps, one Voronoi diagram per frequent keyword and posting lists for the rest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IgNvdIndex {
    pub config: IndexConfig,
    pub gtree: GTree,
    inverted: Vec<InvertedFile>,
    /// Per node and border: upper bound on the distance from the border to any
    /// user in the node, along paths inside the node.
    user_reach: Vec<Vec<f64>>,
    nn: Vec<NnMap>,
    nvds: Vec<Option<Nvd>>,
    poi_postings: Vec<Vec<PoiId>>,
    user_postings: Vec<Vec<UserId>>,
    pub terms: TermWeightTable,
    pub oracle: DistanceOracle,
    /// Content hash of the dataset the index was built from.
    pub dataset_hash: String,
    /// Where the dataset lived when the index was built, if known.
    pub dataset_path: Option<String>,
}

impl IgNvdIndex {
    pub fn build(ds: &GeoSocialDataset, config: IndexConfig) -> Result<Self> {
        let gtree = GTree::build(&ds.road, config.fanout, config.leaf_capacity)?;
        let terms = TermWeightTable::build(ds);
        let nk = ds.vocab.len();

        let mut poi_postings = vec![Vec::new(); nk];
        for (i, p) in ds.pois.iter().enumerate() {
            for &(t, _) in &p.keywords {
                poi_postings[t as usize].push(i as PoiId);
            }
        }
        let mut user_postings = vec![Vec::new(); nk];
        for (i, u) in ds.users.iter().enumerate() {
            for &(t, _) in &u.keywords {
                user_postings[t as usize].push(i as UserId);
            }
        }

        let nvds: Vec<Option<Nvd>> = (0..nk)
            .into_par_iter()
            .map(|t| {
                let gens = &poi_postings[t];
                (gens.len() as u32 >= config.frequency_threshold && !gens.is_empty())
                    .then(|| Nvd::build(ds, t as KeywordId, gens))
            })
            .collect();

        let inverted = build_inverted(ds, &gtree, &terms);
        let user_reach = build_user_reach(ds, &gtree);

        let oracle = match config.oracle {
            DistanceStrategy::Dijkstra => {
                DistanceOracle::build(&ds.road, DistanceStrategy::Dijkstra)
            }
            DistanceStrategy::HubLabels => {
                DistanceOracle::with_labels(&ds.road, HubLabels::build(&ds.road))
            }
        };

        let mut index = IgNvdIndex {
            config,
            nn: Vec::new(),
            gtree,
            inverted,
            user_reach,
            nvds,
            poi_postings,
            user_postings,
            terms,
            oracle,
            dataset_hash: manifest_of(ds).content_hash,
            dataset_path: None,
        };
        index.nn = index.build_nn_maps();
        if config.compress {
            index.compress_nn_maps();
        }
        Ok(index)
    }

    fn build_nn_maps(&self) -> Vec<NnMap> {
        (0..self.gtree.len())
            .into_par_iter()
            .map(|id| {
                let node = self.gtree.node(id as NodeId);
                let keys = if node.is_leaf() {
                    node.vertices.clone()
                } else {
                    node.borders.clone()
                };
                if keys.is_empty() {
                    return NnMap::default();
                }
                let columns = self.inverted[id]
                    .entries()
                    .iter()
                    .filter_map(|&(t, _)| {
                        let nvd = self.nvds[t as usize].as_ref()?;
                        let owners = nvd.owners();
                        Some((
                            t,
                            NnColumn::Plain(keys.iter().map(|&v| owners[v as usize]).collect()),
                        ))
                    })
                    .collect();
                NnMap { keys, columns }
            })
            .collect()
    }

    /// Dictionary-codes every nearest-neighbour column. Lookups are unchanged.
    pub fn compress_nn_maps(&mut self) {
        for map in &mut self.nn {
            for col in &mut map.columns {
                col.1 = col.1.compress();
            }
        }
    }

    /// Bytes used by nearest-neighbour columns.
    pub fn nn_storage_bytes(&self) -> usize {
        self.nn
            .iter()
            .flat_map(|m| m.columns.iter())
            .map(|c| c.1.bytes())
            .sum()
    }

    pub fn is_frequent(&self, t: KeywordId) -> bool {
        self.nvds.get(t as usize).is_some_and(|n| n.is_some())
    }

    pub fn nvd(&self, t: KeywordId) -> Option<&Nvd> {
        self.nvds.get(t as usize).and_then(|n| n.as_ref())
    }

    /// Nearest POI with keyword `t` from vertex `v` and its distance.
    pub fn nvd_lookup(&self, v: VertexId, t: KeywordId) -> Result<Option<(PoiId, f64)>> {
        let nvd = self.nvd(t).ok_or(Error::NotFrequent(t))?;
        Ok(nvd.lookup(v))
    }

    pub fn nn_map(&self, node: NodeId) -> &NnMap {
        &self.nn[node as usize]
    }

    pub fn inverted(&self, node: NodeId) -> &InvertedFile {
        &self.inverted[node as usize]
    }

    /// Reach bound aligned with `gtree.node(node).borders`.
    pub fn user_reach(&self, node: NodeId) -> &[f64] {
        &self.user_reach[node as usize]
    }

    /// POIs carrying `t`, sorted.
    pub fn poi_postings(&self, t: KeywordId) -> &[PoiId] {
        &self.poi_postings[t as usize]
    }

    /// Users carrying `t`, sorted.
    pub fn user_postings(&self, t: KeywordId) -> &[UserId] {
        &self.user_postings[t as usize]
    }

    pub fn num_keywords(&self) -> usize {
        self.poi_postings.len()
    }

    pub fn frequent_keywords(&self) -> Vec<KeywordId> {
        (0..self.nvds.len() as KeywordId)
            .filter(|&t| self.is_frequent(t))
            .collect()
    }

    /// Fails when `ds` is not the dataset this index was built from.
    pub fn check_dataset(&self, ds: &GeoSocialDataset) -> Result<()> {
        let hash = manifest_of(ds).content_hash;
        if hash != self.dataset_hash {
            return Err(Error::Dataset(format!(
                "index was built for dataset {} but the loaded dataset hashes to {}",
                self.dataset_hash, hash
            )));
        }
        Ok(())
    }

    pub fn road(&self) -> &RoadNetwork {
        self.oracle.road()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let payload = bincode::serialize(self)
            .map_err(|e| Error::IndexCorrupt(format!("serialization failed: {e}")))?;
        let hash = Sha256::digest(&payload);
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut header = Vec::with_capacity(MAGIC.len() + 44);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        header.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        header.extend_from_slice(&hash);
        file.write_all(&header)
            .and_then(|_| file.write_all(&payload))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let head = MAGIC.len() + 4 + 8 + 32;
        if bytes.len() < head || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::IndexCorrupt("missing index header".into()));
        }
        let mut at = MAGIC.len();
        let version = u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        at += 4;
        if version != INDEX_VERSION {
            return Err(Error::IndexVersion {
                found: version,
                expected: INDEX_VERSION,
            });
        }
        let len = u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes")) as usize;
        at += 8;
        let hash = &bytes[at..at + 32];
        at += 32;
        let payload = &bytes[at..];
        if payload.len() != len || Sha256::digest(payload).as_slice() != hash {
            return Err(Error::IndexCorrupt("content hash mismatch".into()));
        }
        bincode::deserialize(payload)
            .map_err(|e| Error::IndexCorrupt(format!("cannot decode payload: {e}")))
    }
}

const MAGIC: &[u8; 8] = b"GSMI-IDX";
pub const INDEX_VERSION: u32 = 1;

fn build_inverted(
    ds: &GeoSocialDataset,
    gtree: &GTree,
    terms: &TermWeightTable,
) -> Vec<InvertedFile> {
    let mut vertex_users: Vec<Vec<UserId>> = vec![Vec::new(); ds.road.num_vertices()];
    for (i, u) in ds.users.iter().enumerate() {
        vertex_users[u.loc.vertex as usize].push(i as UserId);
    }
    let mut files: Vec<Option<BTreeMap<KeywordId, Postings>>> = vec![None; gtree.len()];
    for id in (0..gtree.len()).rev() {
        let node = gtree.node(id as NodeId);
        let mut map: BTreeMap<KeywordId, Postings> = BTreeMap::new();
        if node.is_leaf() {
            for &v in &node.vertices {
                for &p in ds.pois_at(v) {
                    for &(t, _) in &ds.pois[p as usize].keywords {
                        map.entry(t).or_default().pois.push(p);
                    }
                }
                for &u in &vertex_users[v as usize] {
                    for &(t, w) in terms.user_terms(u) {
                        let e = map.entry(t).or_default();
                        e.users.push(u);
                        e.max_user_weight = e.max_user_weight.max(w);
                    }
                }
            }
        } else {
            for &c in &node.children {
                let child = files[c as usize].as_ref().expect("children built first");
                for (&t, post) in child {
                    let e = map.entry(t).or_default();
                    e.pois.extend_from_slice(&post.pois);
                    e.users.extend_from_slice(&post.users);
                    e.max_user_weight = e.max_user_weight.max(post.max_user_weight);
                }
            }
        }
        for post in map.values_mut() {
            post.pois.sort_unstable();
            post.users.sort_unstable();
        }
        files[id] = Some(map);
    }
    files
        .into_iter()
        .map(|m| InvertedFile {
            entries: m.expect("built").into_iter().collect(),
        })
        .collect()
}

#[derive(PartialEq)]
struct Item(f64, VertexId);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// For every border, the largest in-node distance to a user of the node.
fn build_user_reach(ds: &GeoSocialDataset, gtree: &GTree) -> Vec<Vec<f64>> {
    let mut vertex_users: Vec<Vec<UserId>> = vec![Vec::new(); ds.road.num_vertices()];
    for (i, u) in ds.users.iter().enumerate() {
        vertex_users[u.loc.vertex as usize].push(i as UserId);
    }
    (0..gtree.len())
        .into_par_iter()
        .map(|id| {
            let node = gtree.node(id as NodeId);
            if node.borders.is_empty() {
                return Vec::new();
            }
            let local = |v: VertexId| node.vertices.binary_search(&v).ok();
            let targets: Vec<(usize, f64)> = node
                .vertices
                .iter()
                .enumerate()
                .flat_map(|(i, &v)| {
                    vertex_users[v as usize]
                        .iter()
                        .map(move |&u| (i, ds.users[u as usize].loc.offset))
                })
                .collect();
            if targets.is_empty() {
                return vec![0.0; node.borders.len()];
            }
            let mut dist = vec![f64::INFINITY; node.vertices.len()];
            node.borders
                .iter()
                .map(|&b| {
                    dist.iter_mut().for_each(|d| *d = f64::INFINITY);
                    let s = local(b).expect("border inside node");
                    dist[s] = 0.0;
                    let mut heap = BinaryHeap::new();
                    heap.push(Item(0.0, b));
                    while let Some(Item(d, v)) = heap.pop() {
                        let li = local(v).expect("inside");
                        if d > dist[li] {
                            continue;
                        }
                        for (w, len) in ds.road.neighbors(v) {
                            if let Some(lw) = local(w) {
                                let nd = d + len;
                                if nd < dist[lw] {
                                    dist[lw] = nd;
                                    heap.push(Item(nd, w));
                                }
                            }
                        }
                    }
                    targets
                        .iter()
                        .map(|&(i, off)| dist[i] + off)
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect()
}
