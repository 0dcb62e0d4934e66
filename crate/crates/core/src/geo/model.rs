use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u32;
pub type UserId = u32;
pub type PoiId = u32;
pub type KeywordId = u32;

/// A point on the road network: the nearest vertex plus the distance to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub vertex: VertexId,
    pub offset: f64,
}

impl Location {
    pub fn at(vertex: VertexId) -> Self {
        Location {
            vertex,
            offset: 0.0,
        }
    }
}

/// Undirected road network in CSR form. Edge weights are lengths in meters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoadNetwork {
    coords: Vec<(f64, f64)>,
    edges: Vec<(VertexId, VertexId, f64)>,
    offsets: Vec<u32>,
    targets: Vec<VertexId>,
    weights: Vec<f64>,
}

impl RoadNetwork {
    pub fn new(coords: Vec<(f64, f64)>, edges: Vec<(VertexId, VertexId, f64)>) -> Result<Self> {
        let n = coords.len();
        let mut degree = vec![0u32; n + 1];
        for (i, &(a, b, w)) in edges.iter().enumerate() {
            if a as usize >= n || b as usize >= n {
                return Err(Error::Dataset(format!(
                    "road edge {i} references a missing vertex"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Dataset(format!(
                    "road edge {i} has non-positive length {w}"
                )));
            }
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0; offsets[n] as usize];
        let mut weights = vec![0.0; offsets[n] as usize];
        for &(a, b, w) in &edges {
            for (x, y) in [(a, b), (b, a)] {
                let slot = fill[x as usize] as usize;
                targets[slot] = y;
                weights[slot] = w;
                fill[x as usize] += 1;
            }
        }
        Ok(RoadNetwork {
            coords,
            edges,
            offsets,
            targets,
            weights,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn coord(&self, v: VertexId) -> (f64, f64) {
        self.coords[v as usize]
    }

    pub fn edges(&self) -> &[(VertexId, VertexId, f64)] {
        &self.edges
    }

    pub fn degree(&self, v: VertexId) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let lo = self.offsets[v as usize] as usize;
        let hi = self.offsets[v as usize + 1] as usize;
        self.targets[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }
}

/// Directed social network. Edge weights are influence probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SocialNetwork {
    num_users: usize,
    edges: Vec<(UserId, UserId, f64)>,
    out_offsets: Vec<u32>,
    out_adj: Vec<(UserId, f64)>,
    in_offsets: Vec<u32>,
    in_adj: Vec<(UserId, f64)>,
}

fn csr(
    n: usize,
    pairs: impl Iterator<Item = (u32, u32, f64)> + Clone,
) -> (Vec<u32>, Vec<(u32, f64)>) {
    let mut offsets = vec![0u32; n + 1];
    for (a, _, _) in pairs.clone() {
        offsets[a as usize + 1] += 1;
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let mut fill = offsets.clone();
    let mut adj = vec![(0u32, 0.0); offsets[n] as usize];
    for (a, b, w) in pairs {
        adj[fill[a as usize] as usize] = (b, w);
        fill[a as usize] += 1;
    }
    for v in 0..n {
        adj[offsets[v] as usize..offsets[v + 1] as usize].sort_by_key(|e| e.0);
    }
    (offsets, adj)
}

impl SocialNetwork {
    pub fn new(num_users: usize, edges: Vec<(UserId, UserId, f64)>) -> Result<Self> {
        for (i, &(a, b, w)) in edges.iter().enumerate() {
            if a as usize >= num_users || b as usize >= num_users {
                return Err(Error::Dataset(format!(
                    "social edge {i} references a missing user"
                )));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Dataset(format!(
                    "social edge {i} has probability {w} outside [0, 1]"
                )));
            }
        }
        let (out_offsets, out_adj) = csr(num_users, edges.iter().copied());
        let (in_offsets, in_adj) = csr(num_users, edges.iter().map(|&(a, b, w)| (b, a, w)));
        Ok(SocialNetwork {
            num_users,
            edges,
            out_offsets,
            out_adj,
            in_offsets,
            in_adj,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(UserId, UserId, f64)] {
        &self.edges
    }

    #[inline]
    pub fn out_edges(&self, u: UserId) -> &[(UserId, f64)] {
        &self.out_adj
            [self.out_offsets[u as usize] as usize..self.out_offsets[u as usize + 1] as usize]
    }

    /// Position of `u`'s first out-edge in the concatenation of all out-edge
    /// lists, giving every edge a dense id.
    #[inline]
    pub fn out_edge_base(&self, u: UserId) -> usize {
        self.out_offsets[u as usize] as usize
    }

    #[inline]
    pub fn in_edges(&self, u: UserId) -> &[(UserId, f64)] {
        &self.in_adj[self.in_offsets[u as usize] as usize..self.in_offsets[u as usize + 1] as usize]
    }

    /// Users adjacent to `u` in either direction, sorted and deduplicated.
    pub fn neighbors_undirected(&self, u: UserId) -> Vec<UserId> {
        let mut out: Vec<UserId> = self
            .out_edges(u)
            .iter()
            .chain(self.in_edges(u))
            .map(|e| e.0)
            .filter(|&v| v != u)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub loc: Location,
    /// Sorted by keyword id.
    pub keywords: Vec<(KeywordId, f64)>,
    /// Users who checked in here, sorted.
    pub checkins: Vec<UserId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub loc: Location,
    /// Sorted by keyword id.
    pub keywords: Vec<(KeywordId, f64)>,
    /// Sorted.
    pub friends: Vec<UserId>,
}

impl Poi {
    pub fn has_keyword(&self, t: KeywordId) -> bool {
        self.keywords.binary_search_by_key(&t, |e| e.0).is_ok()
    }
}

impl User {
    pub fn has_keyword(&self, t: KeywordId) -> bool {
        self.keywords.binary_search_by_key(&t, |e| e.0).is_ok()
    }
}

/// Keyword strings in id order. Ids are assigned by sorted term.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    lookup: HashMap<String, KeywordId>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(terms: Vec<String>) -> Self {
        Vocabulary::from_terms(terms)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

impl Vocabulary {
    pub fn from_terms(mut terms: Vec<String>) -> Self {
        terms.sort();
        terms.dedup();
        let lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as KeywordId))
            .collect();
        Vocabulary { terms, lookup }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<KeywordId> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, id: KeywordId) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// External ids of each dense internal id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdMap {
    pub vertices: Vec<u64>,
    pub users: Vec<u64>,
    pub pois: Vec<u64>,
}

impl IdMap {
    pub fn identity(vertices: usize, users: usize, pois: usize) -> Self {
        IdMap {
            vertices: (0..vertices as u64).collect(),
            users: (0..users as u64).collect(),
            pois: (0..pois as u64).collect(),
        }
    }

    pub fn poi_index(&self, external: u64) -> Option<PoiId> {
        lookup_dense(&self.pois, external)
    }

    pub fn user_index(&self, external: u64) -> Option<UserId> {
        lookup_dense(&self.users, external)
    }
}

fn lookup_dense(ids: &[u64], external: u64) -> Option<u32> {
    if (external as usize) < ids.len() && ids[external as usize] == external {
        return Some(external as u32);
    }
    ids.iter().position(|&x| x == external).map(|i| i as u32)
}

/// The full geo-social input: road network, social network, POIs, users.
#[derive(Debug, Clone)]
pub struct GeoSocialDataset {
    pub road: RoadNetwork,
    pub social: SocialNetwork,
    pub users: Vec<User>,
    pub pois: Vec<Poi>,
    pub vocab: Vocabulary,
    pub ids: IdMap,
    user_checkins: Vec<Vec<PoiId>>,
    vertex_pois: Vec<Vec<PoiId>>,
}

impl GeoSocialDataset {
    /// Validates references and builds derived lookups.
    ///
    /// Friend lists are recomputed from the social network when empty;
    /// otherwise they must match the undirected adjacency.
    pub fn new(
        road: RoadNetwork,
        social: SocialNetwork,
        mut users: Vec<User>,
        mut pois: Vec<Poi>,
        vocab: Vocabulary,
        ids: IdMap,
    ) -> Result<Self> {
        if pois.is_empty() {
            return Err(Error::Dataset("no POIs".into()));
        }
        if social.num_users() != users.len() {
            return Err(Error::Dataset(format!(
                "social network has {} users but {} user records were given",
                social.num_users(),
                users.len()
            )));
        }
        let nv = road.num_vertices();
        let nk = vocab.len();
        let check_loc = |what: &str, i: usize, loc: &Location| -> Result<()> {
            if loc.vertex as usize >= nv {
                return Err(Error::Dataset(format!(
                    "{what} {i} references missing vertex {}",
                    loc.vertex
                )));
            }
            if !(loc.offset.is_finite() && loc.offset >= 0.0) {
                return Err(Error::Dataset(format!("{what} {i} has a negative offset")));
            }
            Ok(())
        };
        let check_kw = |what: &str, i: usize, kws: &mut Vec<(KeywordId, f64)>| -> Result<()> {
            kws.sort_by_key(|e| e.0);
            for w in kws.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Dataset(format!("{what} {i} repeats a keyword")));
                }
            }
            for &(t, w) in kws.iter() {
                if t as usize >= nk {
                    return Err(Error::Dataset(format!(
                        "{what} {i} uses unknown keyword {t}"
                    )));
                }
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::Dataset(format!(
                        "{what} {i} has non-positive keyword weight"
                    )));
                }
            }
            Ok(())
        };
        for (i, p) in pois.iter_mut().enumerate() {
            check_loc("POI", i, &p.loc)?;
            check_kw("POI", i, &mut p.keywords)?;
            p.checkins.sort_unstable();
            p.checkins.dedup();
            if let Some(&u) = p.checkins.iter().find(|&&u| u as usize >= users.len()) {
                return Err(Error::Dataset(format!(
                    "POI {i} has a check-in by missing user {u}"
                )));
            }
        }
        for i in 0..users.len() {
            let adj = social.neighbors_undirected(i as UserId);
            let u = &mut users[i];
            check_loc("user", i, &u.loc)?;
            check_kw("user", i, &mut u.keywords)?;
            u.friends.sort_unstable();
            u.friends.dedup();
            if let Some(&f) = u
                .friends
                .iter()
                .find(|&&f| f as usize >= social.num_users())
            {
                return Err(Error::Dataset(format!("user {i} lists missing friend {f}")));
            }
            if u.friends.is_empty() {
                u.friends = adj;
            } else if u.friends != adj {
                return Err(Error::Dataset(format!(
                    "user {i}: friend list does not match the social network"
                )));
            }
        }
        let mut user_checkins = vec![Vec::new(); users.len()];
        let mut vertex_pois = vec![Vec::new(); nv];
        for (pid, p) in pois.iter().enumerate() {
            for &u in &p.checkins {
                user_checkins[u as usize].push(pid as PoiId);
            }
            vertex_pois[p.loc.vertex as usize].push(pid as PoiId);
        }
        Ok(GeoSocialDataset {
            road,
            social,
            users,
            pois,
            vocab,
            ids,
            user_checkins,
            vertex_pois,
        })
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_pois(&self) -> usize {
        self.pois.len()
    }

    /// POIs the user has checked in at, sorted.
    pub fn checkins_of(&self, u: UserId) -> &[PoiId] {
        &self.user_checkins[u as usize]
    }

    /// POIs attached to the given vertex, sorted.
    pub fn pois_at(&self, v: VertexId) -> &[PoiId] {
        &self.vertex_pois[v as usize]
    }

    /// POIs at which at least one friend of `u` checked in, sorted.
    pub fn socially_relevant_pois(&self, u: UserId) -> Vec<PoiId> {
        let mut out: Vec<PoiId> = self.users[u as usize]
            .friends
            .iter()
            .flat_map(|&f| self.checkins_of(f).iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Users with at least one friend who checked in at `p`, sorted.
    pub fn socially_relevant_users(&self, p: PoiId) -> Vec<UserId> {
        let mut out: Vec<UserId> = self.pois[p as usize]
            .checkins
            .iter()
            .flat_map(|&c| self.users[c as usize].friends.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Internal POI ids for external ids, in the given order.
    pub fn resolve_pois(&self, external: &[u64]) -> Result<Vec<PoiId>> {
        external
            .iter()
            .map(|&e| self.ids.poi_index(e).ok_or(Error::UnknownPoi(e)))
            .collect()
    }
}
