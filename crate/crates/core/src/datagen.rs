//! Seeded synthetic geo-social datasets and query sets.
//!
//! Roads are grids or random near-planar graphs with integer edge lengths, so
//! every path length is an exact float. Keywords follow a Zipf law, check-ins
//! favour nearby users with probability proportional to `exp(-dist / lambda)`,
//! friendships grow by preferential attachment and influence probabilities
//! follow the weighted cascade `w(u, v) = 1 / d_in(v)`.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{
    GeoSocialDataset, IdMap, KeywordId, Location, Poi, PoiId, RoadNetwork, SocialNetwork, User,
    UserId, VertexId, Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RoadModel {
    /// `width x height` lattice with edge lengths drawn from `min_len..=max_len`.
    Grid {
        width: u32,
        height: u32,
        min_len: u32,
        max_len: u32,
    },
    /// Random points in a square joined to their `k` nearest neighbours.
    RandomPlanar { vertices: u32, extent: f64, k: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub road: RoadModel,
    pub users: usize,
    pub pois: usize,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub poi_keywords_mean: f64,
    pub user_keywords_mean: f64,
    /// POI keyword weights are integers in `1..=poi_weight_max`.
    pub poi_weight_max: u32,
    pub checkins_mean: f64,
    /// Decay length of the check-in locality kernel, in meters.
    pub checkin_lambda: f64,
    /// Edges added per new user by preferential attachment.
    pub friends_per_user: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Toy1,
    Desk1,
    Bench1,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy-1" => Ok(Preset::Toy1),
            "desk-1" => Ok(Preset::Desk1),
            "bench-1" => Ok(Preset::Bench1),
            _ => Err(Error::Param(format!(
                "unknown preset '{s}' (expected toy-1, desk-1 or bench-1)"
            ))),
        }
    }
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Toy1 => "toy-1",
            Preset::Desk1 => "desk-1",
            Preset::Bench1 => "bench-1",
        }
    }

    /// Keyword document-frequency threshold suited to the preset's scale.
    pub fn frequency_threshold(&self) -> u32 {
        match self {
            Preset::Toy1 => 3,
            Preset::Desk1 | Preset::Bench1 => 50,
        }
    }
}

impl GenConfig {
    pub fn preset(preset: Preset, seed: u64) -> Self {
        match preset {
            Preset::Toy1 => GenConfig {
                seed,
                road: RoadModel::Grid {
                    width: 4,
                    height: 4,
                    min_len: 80,
                    max_len: 120,
                },
                users: 8,
                pois: 5,
                vocab_size: 3,
                zipf_exponent: 1.0,
                poi_keywords_mean: 1.6,
                user_keywords_mean: 1.4,
                poi_weight_max: 2,
                checkins_mean: 2.0,
                checkin_lambda: 2000.0,
                friends_per_user: 2,
            },
            Preset::Desk1 => GenConfig {
                seed,
                road: RoadModel::Grid {
                    width: 100,
                    height: 100,
                    min_len: 80,
                    max_len: 120,
                },
                users: 50_000,
                pois: 20_000,
                vocab_size: 400,
                zipf_exponent: 1.0,
                poi_keywords_mean: 4.0,
                user_keywords_mean: 3.0,
                poi_weight_max: 2,
                checkins_mean: 5.0,
                checkin_lambda: 2000.0,
                friends_per_user: 5,
            },
            Preset::Bench1 => GenConfig {
                seed,
                road: RoadModel::Grid {
                    width: 150,
                    height: 150,
                    min_len: 80,
                    max_len: 120,
                },
                users: 100_000,
                pois: 110_000,
                vocab_size: 1000,
                zipf_exponent: 1.0,
                poi_keywords_mean: 8.0,
                user_keywords_mean: 3.0,
                poi_weight_max: 2,
                checkins_mean: 5.0,
                checkin_lambda: 2000.0,
                friends_per_user: 5,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pois == 0 {
            return Err(Error::Param("at least one POI is required".into()));
        }
        if self.vocab_size == 0 {
            return Err(Error::Param("vocabulary must not be empty".into()));
        }
        if self.poi_weight_max == 0 || self.checkin_lambda <= 0.0 {
            return Err(Error::Param("weights and lambda must be positive".into()));
        }
        match self.road {
            RoadModel::Grid {
                width,
                height,
                min_len,
                max_len,
            } => {
                if width == 0 || height == 0 || min_len == 0 || min_len > max_len {
                    return Err(Error::Param("bad grid dimensions".into()));
                }
            }
            RoadModel::RandomPlanar {
                vertices,
                extent,
                k,
            } => {
                if vertices == 0 || extent <= 0.0 || k == 0 {
                    return Err(Error::Param("bad random road parameters".into()));
                }
            }
        }
        Ok(())
    }
}

const WORDS: [&str; 24] = [
    "bar",
    "cafe",
    "wine",
    "hotel",
    "museum",
    "park",
    "pizza",
    "sushi",
    "gym",
    "bakery",
    "theater",
    "library",
    "beach",
    "market",
    "club",
    "brewery",
    "spa",
    "zoo",
    "gallery",
    "noodles",
    "tacos",
    "vegan",
    "karaoke",
    "bookstore",
];

/// Name of the keyword with the given popularity rank.
pub fn keyword_name(rank: usize) -> String {
    match WORDS.get(rank) {
        Some(w) => w.to_string(),
        None => format!("kw{rank:04}"),
    }
}

/// Samples keyword ranks from a Zipf law over `n` ranks.
#[derive(Debug, Clone)]
pub struct ZipfSampler {
    dist: Zipf<f64>,
}

impl ZipfSampler {
    pub fn new(n: usize, exponent: f64) -> Result<Self> {
        let dist = Zipf::new(n as f64, exponent)
            .map_err(|e| Error::Param(format!("bad Zipf parameters: {e}")))?;
        Ok(ZipfSampler { dist })
    }

    /// A rank in `0..n`, 0 being the most popular.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        self.dist.sample(rng) as usize - 1
    }

    fn distinct(&self, rng: &mut impl Rng, count: usize, n: usize) -> Vec<usize> {
        let count = count.min(n);
        let mut picked = BTreeSet::new();
        let mut tries = 0;
        while picked.len() < count {
            picked.insert(self.sample(rng));
            tries += 1;
            if tries > 64 * count {
                for r in 0..n {
                    if picked.len() == count {
                        break;
                    }
                    picked.insert(r);
                }
            }
        }
        picked.into_iter().collect()
    }
}

fn count_around(rng: &mut impl Rng, mean: f64) -> usize {
    if mean <= 1.0 {
        return 1;
    }
    let extra = Poisson::new(mean - 1.0).expect("positive mean").sample(rng);
    1 + extra as usize
}

fn build_road(model: &RoadModel, rng: &mut impl Rng) -> Result<RoadNetwork> {
    match *model {
        RoadModel::Grid {
            width,
            height,
            min_len,
            max_len,
        } => {
            let spacing = (min_len + max_len) as f64 / 2.0;
            let mut coords = Vec::with_capacity((width * height) as usize);
            let mut edges = Vec::new();
            for y in 0..height {
                for x in 0..width {
                    coords.push((x as f64 * spacing, y as f64 * spacing));
                    let v = y * width + x;
                    if x + 1 < width {
                        edges.push((v, v + 1, rng.random_range(min_len..=max_len) as f64));
                    }
                    if y + 1 < height {
                        edges.push((v, v + width, rng.random_range(min_len..=max_len) as f64));
                    }
                }
            }
            RoadNetwork::new(coords, edges)
        }
        RoadModel::RandomPlanar {
            vertices,
            extent,
            k,
        } => {
            let n = vertices as usize;
            let coords: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.random::<f64>() * extent, rng.random::<f64>() * extent))
                .collect();
            let euclid = |a: usize, b: usize| {
                let (dx, dy) = (coords[a].0 - coords[b].0, coords[a].1 - coords[b].1);
                (dx * dx + dy * dy).sqrt().ceil().max(1.0)
            };
            let mut set = BTreeSet::new();
            for a in 0..n {
                let mut near: Vec<(f64, usize)> = (0..n)
                    .filter(|&b| b != a)
                    .map(|b| (euclid(a, b), b))
                    .collect();
                near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                for &(_, b) in near.iter().take(k as usize) {
                    set.insert((a.min(b), a.max(b)));
                }
            }
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut [usize], x: usize) -> usize {
                let mut r = x;
                while p[r] != r {
                    r = p[r];
                }
                let mut c = x;
                while p[c] != r {
                    let next = p[c];
                    p[c] = r;
                    c = next;
                }
                r
            }
            for &(a, b) in &set {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
            for a in 0..n {
                if find(&mut parent, a) == find(&mut parent, 0) {
                    continue;
                }
                let best = (0..n)
                    .filter(|&b| find(&mut parent, b) != find(&mut parent, a))
                    .min_by(|&x, &y| euclid(a, x).total_cmp(&euclid(a, y)).then(x.cmp(&y)))
                    .expect("another component exists");
                set.insert((a.min(best), a.max(best)));
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, best));
                parent[ra] = rb;
            }
            let edges = set
                .into_iter()
                .map(|(a, b)| (a as VertexId, b as VertexId, euclid(a, b)))
                .collect();
            RoadNetwork::new(coords, edges)
        }
    }
}

fn preferential_attachment(n: usize, m: usize, rng: &mut impl Rng) -> Vec<(UserId, UserId)> {
    let mut edges = BTreeSet::new();
    if n < 2 || m == 0 {
        return Vec::new();
    }
    let core = (m + 1).min(n);
    let mut ends: Vec<UserId> = Vec::new();
    for a in 0..core {
        for b in a + 1..core {
            edges.insert((a as UserId, b as UserId));
            ends.push(a as UserId);
            ends.push(b as UserId);
        }
    }
    for v in core..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m.min(v) {
            targets.insert(ends[rng.random_range(0..ends.len())]);
        }
        for t in targets {
            edges.insert((t, v as UserId));
            ends.push(t);
            ends.push(v as UserId);
        }
    }
    edges.into_iter().collect()
}

/// Generates a dataset. Identical configs give identical datasets.
pub fn generate(config: &GenConfig) -> Result<GeoSocialDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let road = build_road(&config.road, &mut rng)?;
    let nv = road.num_vertices();
    let zipf = ZipfSampler::new(config.vocab_size, config.zipf_exponent)?;

    let user_vertex: Vec<VertexId> = (0..config.users)
        .map(|_| rng.random_range(0..nv) as VertexId)
        .collect();
    let users_kw: Vec<Vec<(KeywordId, f64)>> = (0..config.users)
        .map(|_| {
            let c = count_around(&mut rng, config.user_keywords_mean);
            zipf.distinct(&mut rng, c, config.vocab_size)
                .into_iter()
                .map(|r| (r as KeywordId, 1.0))
                .collect()
        })
        .collect();

    let mut pois = Vec::with_capacity(config.pois);
    for _ in 0..config.pois {
        let vertex = rng.random_range(0..nv) as VertexId;
        let c = count_around(&mut rng, config.poi_keywords_mean);
        let keywords = zipf
            .distinct(&mut rng, c, config.vocab_size)
            .into_iter()
            .map(|r| {
                (
                    r as KeywordId,
                    rng.random_range(1..=config.poi_weight_max) as f64,
                )
            })
            .collect();
        let mut checkins = BTreeSet::new();
        if config.users > 0 && config.checkins_mean > 0.0 {
            let want = Poisson::new(config.checkins_mean)
                .expect("positive mean")
                .sample(&mut rng) as usize;
            let want = want.min(config.users);
            let (px, py) = road.coord(vertex);
            let mut tries = 0usize;
            while checkins.len() < want && tries < 10_000 * want.max(1) {
                tries += 1;
                let u = rng.random_range(0..config.users);
                let (ux, uy) = road.coord(user_vertex[u]);
                let d = ((px - ux).powi(2) + (py - uy).powi(2)).sqrt();
                if rng.random::<f64>() < (-d / config.checkin_lambda).exp() {
                    checkins.insert(u as UserId);
                }
            }
        }
        pois.push(Poi {
            loc: Location::at(vertex),
            keywords,
            checkins: checkins.into_iter().collect(),
        });
    }

    let friendships = preferential_attachment(config.users, config.friends_per_user, &mut rng);
    let mut degree = vec![0usize; config.users];
    for &(a, b) in &friendships {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
    }
    let mut social_edges = Vec::with_capacity(2 * friendships.len());
    for &(a, b) in &friendships {
        social_edges.push((a, b, 1.0 / degree[b as usize] as f64));
        social_edges.push((b, a, 1.0 / degree[a as usize] as f64));
    }
    social_edges.sort_by_key(|e| (e.0, e.1));
    let social = SocialNetwork::new(config.users, social_edges)?;

    let users = user_vertex
        .into_iter()
        .zip(users_kw)
        .map(|(v, keywords)| User {
            loc: Location::at(v),
            keywords,
            friends: Vec::new(),
        })
        .collect::<Vec<_>>();

    // Keyword ids are assigned alphabetically; remap ranks accordingly.
    let names: Vec<String> = (0..config.vocab_size).map(keyword_name).collect();
    let vocab = Vocabulary::from_terms(names.clone());
    let remap: Vec<KeywordId> = names
        .iter()
        .map(|n| vocab.id(n).expect("registered"))
        .collect();
    let fix = |kws: Vec<(KeywordId, f64)>| {
        let mut out: Vec<(KeywordId, f64)> = kws
            .into_iter()
            .map(|(r, w)| (remap[r as usize], w))
            .collect();
        out.sort_by_key(|e| e.0);
        out
    };
    let users = users
        .into_iter()
        .map(|u| User {
            keywords: fix(u.keywords),
            ..u
        })
        .collect();
    let pois: Vec<Poi> = pois
        .into_iter()
        .map(|p| Poi {
            keywords: fix(p.keywords),
            ..p
        })
        .collect();
    let ids = IdMap::identity(nv, config.users, pois.len());
    GeoSocialDataset::new(road, social, users, pois, vocab, ids)
}

/// Four candidate clusters built from two frequent keywords.
///
/// Cluster 1 and 2 hold POIs with the first keyword whose check-in count is
/// above / not above the dataset average; clusters 3 and 4 do the same for the
/// second keyword. POIs without check-ins are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySet {
    pub keywords: [KeywordId; 2],
    pub clusters: [Vec<PoiId>; 4],
}

impl QuerySet {
    /// Candidates of cluster `c` in `1..=4`.
    pub fn cluster(&self, c: usize) -> &[PoiId] {
        &self.clusters[c - 1]
    }
}

/// Picks two keywords with POI document frequency at least `threshold` whose
/// four groups each hold at least `size` POIs, then samples `size` POIs per
/// cluster.
pub fn generate_query_set(
    ds: &GeoSocialDataset,
    size: usize,
    threshold: u32,
    rng: &mut impl Rng,
) -> Result<QuerySet> {
    let total: usize = ds.pois.iter().map(|p| p.checkins.len()).sum();
    let avg = total as f64 / ds.num_pois() as f64;
    let groups = |t: KeywordId| -> (Vec<PoiId>, Vec<PoiId>, u32) {
        let (mut hi, mut lo, mut df) = (Vec::new(), Vec::new(), 0);
        for (i, p) in ds.pois.iter().enumerate() {
            if !p.has_keyword(t) {
                continue;
            }
            df += 1;
            if p.checkins.is_empty() {
                continue;
            }
            if p.checkins.len() as f64 > avg {
                hi.push(i as PoiId);
            } else {
                lo.push(i as PoiId);
            }
        }
        (hi, lo, df)
    };
    let mut eligible = Vec::new();
    for t in 0..ds.vocab.len() as KeywordId {
        let (hi, lo, df) = groups(t);
        if df >= threshold && hi.len() >= size && lo.len() >= size {
            eligible.push(t);
        }
    }
    if eligible.len() < 2 {
        return Err(Error::Param(format!(
            "fewer than two keywords have df >= {threshold} and {size} POIs per popularity group"
        )));
    }
    let pick = sample(rng, eligible.len(), 2);
    let keywords = [eligible[pick.index(0)], eligible[pick.index(1)]];
    let mut clusters: [Vec<PoiId>; 4] = Default::default();
    for (k, &t) in keywords.iter().enumerate() {
        let (hi, lo, _) = groups(t);
        for (slot, group) in [(2 * k, hi), (2 * k + 1, lo)] {
            let mut chosen: Vec<PoiId> = sample(rng, group.len(), size)
                .into_iter()
                .map(|i| group[i])
                .collect();
            chosen.sort_unstable();
            clusters[slot] = chosen;
        }
    }
    Ok(QuerySet { keywords, clusters })
}

/// Uniform sample of `size` POIs, sorted.
pub fn random_candidates(ds: &GeoSocialDataset, size: usize, rng: &mut impl Rng) -> Vec<PoiId> {
    let size = size.min(ds.num_pois());
    let mut out: Vec<PoiId> = sample(rng, ds.num_pois(), size)
        .into_iter()
        .map(|i| i as PoiId)
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_preset_has_documented_shape() {
        let ds = generate(&GenConfig::preset(Preset::Toy1, 1)).unwrap();
        assert_eq!(ds.road.num_vertices(), 16);
        assert_eq!(ds.num_users(), 8);
        assert_eq!(ds.num_pois(), 5);
        assert_eq!(ds.vocab.len(), 3);
        assert_eq!(ds.vocab.terms(), ["bar", "cafe", "wine"]);
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = GenConfig::preset(Preset::Toy1, 42);
        let a = crate::geo::io::render_dataset(&generate(&cfg).unwrap());
        let b = crate::geo::io::render_dataset(&generate(&cfg).unwrap());
        assert_eq!(a, b);
        let c = crate::geo::io::render_dataset(
            &generate(&GenConfig::preset(Preset::Toy1, 43)).unwrap(),
        );
        assert_ne!(a, c);
    }

    #[test]
    fn weighted_cascade_probabilities_sum_to_one_per_target() {
        let mut cfg = GenConfig::preset(Preset::Toy1, 3);
        cfg.users = 60;
        let ds = generate(&cfg).unwrap();
        for v in 0..ds.num_users() as UserId {
            let inc = ds.social.in_edges(v);
            if !inc.is_empty() {
                let s: f64 = inc.iter().map(|e| e.1).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zipf_rank_frequency_slope_matches_exponent() {
        let n = 50;
        let z = ZipfSampler::new(n, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = vec![0f64; n];
        for _ in 0..10_000 {
            counts[z.sample(&mut rng)] += 1.0;
        }
        // Least-squares slope of log(count) against log(rank) over the head.
        let pts: Vec<(f64, f64)> = counts
            .iter()
            .enumerate()
            .take(20)
            .filter(|c| *c.1 > 0.0)
            .map(|(r, &c)| (((r + 1) as f64).ln(), c.ln()))
            .collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = cov / var;
        assert!((slope + 1.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn random_planar_roads_are_connected() {
        let cfg = GenConfig {
            road: RoadModel::RandomPlanar {
                vertices: 60,
                extent: 5000.0,
                k: 2,
            },
            ..GenConfig::preset(Preset::Toy1, 5)
        };
        let ds = generate(&cfg).unwrap();
        let d = crate::geo::distance::dijkstra_from(&ds.road, &[(0, 0.0)], None);
        assert!(d.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn query_set_clusters_respect_popularity_split() {
        let cfg = GenConfig {
            users: 400,
            pois: 300,
            vocab_size: 10,
            road: RoadModel::Grid {
                width: 10,
                height: 10,
                min_len: 80,
                max_len: 120,
            },
            ..GenConfig::preset(Preset::Toy1, 11)
        };
        let ds = generate(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let qs = generate_query_set(&ds, 5, 10, &mut rng).unwrap();
        let avg = ds.pois.iter().map(|p| p.checkins.len()).sum::<usize>() as f64 / 300.0;
        for c in 1..=4 {
            let kw = qs.keywords[(c - 1) / 2];
            assert_eq!(qs.cluster(c).len(), 5);
            for &p in qs.cluster(c) {
                let poi = &ds.pois[p as usize];
                assert!(poi.has_keyword(kw));
                assert!(!poi.checkins.is_empty());
                assert_eq!(poi.checkins.len() as f64 > avg, c % 2 == 1);
            }
        }
    }
}
