//! End-to-end POI selection: the BA, AP and HE solvers, four baseline
//! policies and an exhaustive reference for tiny instances.

mod exhaustive;
mod he;
mod policies;
mod ris;
#[cfg(test)]
mod tests;

use std::collections::HashSet;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::brknn::{batch_brknn, BrknnResult, CandidateSet, QueryContext};
use crate::error::{Error, Result};
use crate::geo::{GeoSocialDataset, PoiId};
use crate::ignvd::IgNvdIndex;
use crate::influence::{build_heterogeneous_graph, HeterogeneousGraph};
use crate::scoring::ScoreParams;

pub use exhaustive::{exhaustive_optimal, exhaustive_over_members, Exhaustive};
pub use he::solve_he_prepared;
pub use policies::{policy_influencer, policy_maxbrknn, policy_random, policy_relevance};
pub use ris::{solve_ap_prepared, solve_ba_prepared};

/// One MaxInfBRkNN query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    /// Candidate POIs (internal ids), distinct.
    pub pois: Vec<PoiId>,
    pub b: usize,
    pub k: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl QuerySpec {
    pub fn validate(&self, num_pois: usize) -> Result<()> {
        if self.pois.is_empty() {
            return Err(Error::Param("candidate set is empty".into()));
        }
        if let Some(&p) = self.pois.iter().find(|&&p| p as usize >= num_pois) {
            return Err(Error::UnknownPoi(p as u64));
        }
        if self.pois.iter().collect::<HashSet<_>>().len() != self.pois.len() {
            return Err(Error::Param("candidate POIs must be distinct".into()));
        }
        if self.b == 0 || self.b > self.pois.len() {
            return Err(Error::Param(format!(
                "b = {} outside 1..={}",
                self.b,
                self.pois.len()
            )));
        }
        if self.k == 0 {
            return Err(Error::Param("k must be at least 1".into()));
        }
        crate::influence::bounds::check_eps_delta(self.epsilon, self.delta)?;
        ScoreParams::new(self.alpha).map(|_| ())
    }

    pub fn params(&self) -> Result<ScoreParams> {
        ScoreParams::new(self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ba,
    Ap,
    He,
    Relevance,
    Influencer,
    Maxbrknn,
    Random,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Ba,
        Method::Ap,
        Method::He,
        Method::Relevance,
        Method::Influencer,
        Method::Maxbrknn,
        Method::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ba => "ba",
            Method::Ap => "ap",
            Method::He => "he",
            Method::Relevance => "relevance",
            Method::Influencer => "influencer",
            Method::Maxbrknn => "maxbrknn",
            Method::Random => "random",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Param(format!("unknown method '{s}'")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Knobs that are not part of the query itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Upper limit on RR sets held by both collections together.
    pub max_rr_sets: usize,
    /// Users verified per HE round.
    pub he_batch: usize,
    /// Keywords held by fewer users are dropped from HE pseudo-users.
    /// `None` uses the index frequency threshold.
    pub he_min_users: Option<u32>,
    /// Road distance, in meters, within which the relevance policy counts users.
    pub relevance_radius: f64,
    /// Number of influencers picked by the influencer policy.
    pub influencers: usize,
    /// RR sets used to rank influencers.
    pub influencer_rr_sets: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_rr_sets: 1 << 26,
            he_batch: 256,
            he_min_users: None,
            relevance_radius: 5000.0,
            influencers: 200,
            influencer_rr_sets: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub brknn_ms: f64,
    pub sampling_ms: f64,
    pub selection_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub method: Method,
    /// Selected POIs in selection order.
    #[serde(rename = "P_s")]
    pub pois: Vec<PoiId>,
    /// Influence estimate of `pois`, if the method produces one.
    pub estimate: Option<f64>,
    /// Lower confidence bound on the influence of `pois`.
    pub lower: Option<f64>,
    /// Upper confidence bound on the optimal influence.
    pub upper: Option<f64>,
    pub ratio: Option<f64>,
    /// Whether the ratio reached the target before the loop ended.
    pub certified: bool,
    /// Whether sampling stopped at the RR-set cap.
    pub capped: bool,
    pub iterations: usize,
    pub rr_sets: usize,
    pub timings: Timings,
}

impl SolverOutcome {
    fn plain(method: Method, pois: Vec<PoiId>) -> Self {
        SolverOutcome {
            method,
            pois,
            estimate: None,
            lower: None,
            upper: None,
            ratio: None,
            certified: false,
            capped: false,
            iterations: 0,
            rr_sets: 0,
            timings: Timings::default(),
        }
    }
}

/// A validated query with its exact reverse top-k sets computed once, so
/// several methods can share them.
pub struct Instance<'a> {
    pub ctx: QueryContext<'a>,
    pub spec: QuerySpec,
    pub brknn: BrknnResult,
    pub brknn_ms: f64,
    /// HE candidates with the `min_users` they were built for and their build time.
    he_candidates: Arc<OnceLock<(u32, Arc<CandidateSet>, f64)>>,
}

impl<'a> Instance<'a> {
    pub fn prepare(
        spec: &QuerySpec,
        ds: &'a GeoSocialDataset,
        index: &'a IgNvdIndex,
    ) -> Result<Self> {
        spec.validate(ds.num_pois())?;
        let ctx = QueryContext::checked(ds, index, spec.params()?)?;
        let start = Instant::now();
        let brknn = batch_brknn(&ctx, &spec.pois, spec.k)?;
        Ok(Instance {
            ctx,
            spec: spec.clone(),
            brknn,
            brknn_ms: ms(start),
            he_candidates: Arc::default(),
        })
    }

    /// Builds an instance from reverse top-k sets computed elsewhere.
    pub fn from_members(
        spec: &QuerySpec,
        ctx: QueryContext<'a>,
        brknn: BrknnResult,
    ) -> Result<Self> {
        spec.validate(ctx.ds.num_pois())?;
        if brknn.pois != spec.pois {
            return Err(Error::Param(
                "reverse top-k sets do not match the candidates".into(),
            ));
        }
        Ok(Instance {
            ctx,
            spec: spec.clone(),
            brknn,
            brknn_ms: 0.0,
            he_candidates: Arc::default(),
        })
    }

    /// The same candidates and reverse top-k sets with a different budget.
    /// HE candidates computed by either instance are shared.
    pub fn with_budget(&self, b: usize) -> Result<Self> {
        let spec = QuerySpec {
            b,
            ..self.spec.clone()
        };
        spec.validate(self.ctx.ds.num_pois())?;
        Ok(Instance {
            ctx: self.ctx,
            spec,
            brknn: self.brknn.clone(),
            brknn_ms: self.brknn_ms,
            he_candidates: self.he_candidates.clone(),
        })
    }

    pub fn graph(&self) -> HeterogeneousGraph<'a> {
        build_heterogeneous_graph(&self.ctx.ds.social, &self.brknn)
    }

    pub fn candidates(&self) -> Vec<u32> {
        (0..self.spec.pois.len() as u32).collect()
    }

    /// HE candidates for `min_users`, generated on first use.
    fn he_candidates(
        &self,
        min_users: u32,
        make: impl FnOnce() -> Result<CandidateSet>,
    ) -> Result<(Arc<CandidateSet>, f64)> {
        if let Some((m, c, t)) = self.he_candidates.get() {
            if *m == min_users {
                return Ok((c.clone(), *t));
            }
        }
        let start = Instant::now();
        let c = Arc::new(make()?);
        let t = ms(start);
        let _ = self.he_candidates.set((min_users, c.clone(), t));
        Ok((c, t))
    }

    fn to_pois(&self, picks: &[u32]) -> Vec<PoiId> {
        picks.iter().map(|&i| self.spec.pois[i as usize]).collect()
    }
}

pub(crate) fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs `method` on a prepared instance.
pub fn solve_prepared(
    method: Method,
    inst: &Instance<'_>,
    cfg: &SolverConfig,
) -> Result<SolverOutcome> {
    let start = Instant::now();
    let mut out = match method {
        Method::Ba => solve_ba_prepared(inst, cfg)?,
        Method::Ap => solve_ap_prepared(inst, cfg)?,
        Method::He => solve_he_prepared(inst, cfg)?,
        Method::Relevance => policy_relevance(inst, cfg),
        Method::Influencer => policy_influencer(inst, cfg),
        Method::Maxbrknn => policy_maxbrknn(inst),
        Method::Random => policy_random(inst),
    };
    // HE reports its own candidate generation time, which may come from a cache.
    out.timings.total_ms = if method == Method::He {
        out.timings.brknn_ms + out.timings.selection_ms
    } else {
        out.timings.brknn_ms = inst.brknn_ms;
        inst.brknn_ms + ms(start)
    };
    Ok(out)
}

/// Validates `spec`, computes reverse top-k sets and runs `method`.
pub fn solve(
    method: Method,
    spec: &QuerySpec,
    ds: &GeoSocialDataset,
    index: &IgNvdIndex,
    cfg: &SolverConfig,
) -> Result<SolverOutcome> {
    if method == Method::He {
        return solve_he(spec, ds, index, cfg);
    }
    solve_prepared(method, &Instance::prepare(spec, ds, index)?, cfg)
}

pub fn solve_ba(
    spec: &QuerySpec,
    ds: &GeoSocialDataset,
    index: &IgNvdIndex,
    cfg: &SolverConfig,
) -> Result<SolverOutcome> {
    solve(Method::Ba, spec, ds, index, cfg)
}

pub fn solve_ap(
    spec: &QuerySpec,
    ds: &GeoSocialDataset,
    index: &IgNvdIndex,
    cfg: &SolverConfig,
) -> Result<SolverOutcome> {
    solve(Method::Ap, spec, ds, index, cfg)
}

/// HE computes its own reverse top-k sets, so no exact pass is run first.
pub fn solve_he(
    spec: &QuerySpec,
    ds: &GeoSocialDataset,
    index: &IgNvdIndex,
    cfg: &SolverConfig,
) -> Result<SolverOutcome> {
    spec.validate(ds.num_pois())?;
    let ctx = QueryContext::checked(ds, index, spec.params()?)?;
    let inst = Instance {
        ctx,
        spec: spec.clone(),
        brknn: BrknnResult::empty(&spec.pois),
        brknn_ms: 0.0,
        he_candidates: Arc::default(),
    };
    solve_prepared(Method::He, &inst, cfg)
}
