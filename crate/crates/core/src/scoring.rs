//! The geo-social-textual relevance score between a user and a POI.
//!
//! `F(u, p) = (alpha * f_s + (1 - alpha) * f_t) / f_g` where `f_s` is the
//! fraction of `u`'s friends who checked in at `p`, `f_t` is the tf-idf dot
//! product over shared keywords and `f_g = max(dist(u, p), min_distance)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{DistanceOracle, GeoSocialDataset, KeywordId, PoiId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub alpha: f64,
    /// Floor for the distance factor, in meters.
    pub min_distance: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            alpha: 0.6,
            min_distance: 1.0,
        }
    }
}

impl ScoreParams {
    pub fn new(alpha: f64) -> Result<Self> {
        let p = ScoreParams {
            alpha,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Param(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.min_distance.is_finite() && self.min_distance > 0.0) {
            return Err(Error::Param("min_distance must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn geo_factor(&self, dist: f64) -> f64 {
        dist.max(self.min_distance)
    }

    /// Full score from its components. Zero when the pair is disconnected.
    #[inline]
    pub fn score(&self, f_s: f64, f_t: f64, dist: f64) -> f64 {
        if dist == f64::INFINITY {
            return 0.0;
        }
        (self.alpha * f_s + (1.0 - self.alpha) * f_t) / self.geo_factor(dist)
    }

    /// Score with the social term dropped. Equals `score(0, f_t, dist)` bit for bit.
    #[inline]
    pub fn partial(&self, f_t: f64, dist: f64) -> f64 {
        self.score(0.0, f_t, dist)
    }
}

/// tf-idf weights for every POI and user keyword.
///
/// `TS(t, o) = w(t, o) * ln(1 + N / df(t))`, with `N` and `df` taken from the
/// POI corpus for POI terms and from the user corpus for user terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermWeightTable {
    poi_df: Vec<u32>,
    user_df: Vec<u32>,
    poi_terms: Vec<Vec<(KeywordId, f64)>>,
    user_terms: Vec<Vec<(KeywordId, f64)>>,
    poi_max: Vec<f64>,
}

fn idf(n: usize, df: u32) -> f64 {
    if df == 0 {
        0.0
    } else {
        (1.0 + n as f64 / df as f64).ln()
    }
}

impl TermWeightTable {
    pub fn build(ds: &GeoSocialDataset) -> Self {
        let nk = ds.vocab.len();
        let mut poi_df = vec![0u32; nk];
        let mut user_df = vec![0u32; nk];
        for p in &ds.pois {
            for &(t, _) in &p.keywords {
                poi_df[t as usize] += 1;
            }
        }
        for u in &ds.users {
            for &(t, _) in &u.keywords {
                user_df[t as usize] += 1;
            }
        }
        let poi_idf: Vec<f64> = poi_df.iter().map(|&d| idf(ds.num_pois(), d)).collect();
        let user_idf: Vec<f64> = user_df.iter().map(|&d| idf(ds.num_users(), d)).collect();
        let poi_terms: Vec<Vec<(KeywordId, f64)>> = ds
            .pois
            .iter()
            .map(|p| {
                p.keywords
                    .iter()
                    .map(|&(t, w)| (t, w * poi_idf[t as usize]))
                    .collect()
            })
            .collect();
        let user_terms = ds
            .users
            .iter()
            .map(|u| {
                u.keywords
                    .iter()
                    .map(|&(t, w)| (t, w * user_idf[t as usize]))
                    .collect()
            })
            .collect();
        let mut poi_max = vec![0.0f64; nk];
        for terms in &poi_terms {
            for &(t, ts) in terms {
                poi_max[t as usize] = poi_max[t as usize].max(ts);
            }
        }
        TermWeightTable {
            poi_df,
            user_df,
            poi_terms,
            user_terms,
            poi_max,
        }
    }

    pub fn poi_df(&self, t: KeywordId) -> u32 {
        self.poi_df[t as usize]
    }

    pub fn user_df(&self, t: KeywordId) -> u32 {
        self.user_df[t as usize]
    }

    /// `TS(t, p)` for every keyword of `p`, sorted by keyword.
    pub fn poi_terms(&self, p: PoiId) -> &[(KeywordId, f64)] {
        &self.poi_terms[p as usize]
    }

    /// `TS(t, u)` for every keyword of `u`, sorted by keyword.
    pub fn user_terms(&self, u: UserId) -> &[(KeywordId, f64)] {
        &self.user_terms[u as usize]
    }

    pub fn poi_weight(&self, p: PoiId, t: KeywordId) -> f64 {
        lookup(self.poi_terms(p), t)
    }

    pub fn user_weight(&self, u: UserId, t: KeywordId) -> f64 {
        lookup(self.user_terms(u), t)
    }

    /// Largest `TS(t, p)` over all POIs.
    pub fn max_poi_weight(&self, t: KeywordId) -> f64 {
        self.poi_max[t as usize]
    }

    /// `f_t(u, p)`.
    pub fn textual(&self, u: UserId, p: PoiId) -> f64 {
        dot(self.user_terms(u), self.poi_terms(p))
    }
}

fn lookup(terms: &[(KeywordId, f64)], t: KeywordId) -> f64 {
    terms
        .binary_search_by_key(&t, |e| e.0)
        .map_or(0.0, |i| terms[i].1)
}

/// Dot product of two keyword-sorted weight lists, summed in keyword order.
pub fn dot(a: &[(KeywordId, f64)], b: &[(KeywordId, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

/// Size of the intersection of two sorted id lists.
pub fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `f_s(u, p)`: share of `u`'s friends who checked in at `p`. Zero without friends.
pub fn social_relevance(ds: &GeoSocialDataset, u: UserId, p: PoiId) -> f64 {
    let friends = &ds.users[u as usize].friends;
    if friends.is_empty() {
        return 0.0;
    }
    intersection_size(friends, &ds.pois[p as usize].checkins) as f64 / friends.len() as f64
}

/// Bundles everything needed to score a pair.
#[derive(Clone, Copy)]
pub struct Scorer<'a> {
    pub ds: &'a GeoSocialDataset,
    pub terms: &'a TermWeightTable,
    pub oracle: &'a DistanceOracle,
    pub params: ScoreParams,
}

impl<'a> Scorer<'a> {
    pub fn distance(&self, u: UserId, p: PoiId) -> f64 {
        self.oracle.shortest_distance(
            &self.ds.users[u as usize].loc,
            &self.ds.pois[p as usize].loc,
        )
    }

    /// `F_GST(u, p)`.
    pub fn score(&self, u: UserId, p: PoiId) -> f64 {
        let f_s = social_relevance(self.ds, u, p);
        let f_t = self.terms.textual(u, p);
        if f_s == 0.0 && f_t == 0.0 {
            return 0.0;
        }
        self.params.score(f_s, f_t, self.distance(u, p))
    }

    /// Score with the social term dropped.
    pub fn partial(&self, u: UserId, p: PoiId) -> f64 {
        let f_t = self.terms.textual(u, p);
        if f_t == 0.0 {
            return 0.0;
        }
        self.params.partial(f_t, self.distance(u, p))
    }
}
