//! One-parameter sweeps over the solvers with a shared Monte-Carlo evaluation.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use gsmi_core::datagen::generate_query_set;
use gsmi_core::geo::manifest_of;
use gsmi_core::ignvd::IgNvdIndex;
use gsmi_core::influence::estimate_influence_paired;
use gsmi_core::solvers::{solve_prepared, Instance, Method, QuerySpec, SolverConfig};
use gsmi_core::{GeoSocialDataset, PoiId, UserId};

use crate::commands::{default_delta, emit};
use crate::ids::{load_pair, resolve_pois};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    B,
    K,
    Pc,
    Alpha,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::B => "b",
            Sweep::K => "k",
            Sweep::Pc => "pc",
            Sweep::Alpha => "alpha",
        }
    }

    /// Sweep range with the default point in the middle.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            Sweep::B => vec![1.0, 3.0, 5.0, 7.0, 9.0],
            Sweep::K => vec![10.0, 15.0, 20.0, 25.0, 30.0],
            Sweep::Pc => vec![20.0, 40.0, 60.0, 80.0, 100.0],
            Sweep::Alpha => vec![0.0, 0.2, 0.4, 0.6, 0.8],
        }
    }
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "b")]
    sweep: Sweep,
    /// Comma-separated values (default: the standard range for the swept parameter).
    #[arg(long)]
    values: Option<String>,
    /// Values held fixed while another parameter is swept.
    #[arg(long, default_value_t = 5)]
    b: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 60)]
    pc: usize,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value = "ap,ba,he,relevance,influencer,maxbrknn,random")]
    methods: String,
    /// Explicit candidate POIs (`1,2,3` or `@file`) in place of a generated cluster.
    #[arg(long)]
    pois: Option<String>,
    /// Query cluster 1..=4.
    #[arg(long, default_value_t = 1)]
    cluster: usize,
    #[arg(long, default_value_t = 0)]
    query_seed: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cascades per method for the final influence estimate.
    #[arg(long, default_value_t = 10_000)]
    mc_sims: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    delta: Option<f64>,
    /// Writes `<out>.tsv` and `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

pub struct SuiteConfig {
    pub sweep: Sweep,
    pub values: Vec<f64>,
    /// `(b, k, pc, alpha)` outside the swept parameter.
    pub fixed: (usize, usize, usize, f64),
    pub methods: Vec<Method>,
    /// Candidates to use instead of a generated query cluster.
    pub candidates: Option<Vec<PoiId>>,
    pub cluster: usize,
    pub query_seed: u64,
    pub seed: u64,
    pub mc_sims: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub param: Sweep,
    pub value: f64,
    pub k: usize,
    pub pc: usize,
    pub b: usize,
    pub alpha: f64,
    pub pois: Vec<u64>,
    pub brknn_ms: f64,
    pub sampling_ms: f64,
    pub selection_ms: f64,
    pub total_ms: f64,
    pub influence: f64,
    pub influence_se: f64,
    pub estimate: Option<f64>,
    pub ratio: Option<f64>,
    pub rr_sets: usize,
    pub iterations: usize,
    pub pruned_by_score: usize,
    pub pruned_borders: usize,
    pub pruned_nodes: usize,
    pub pruned_outside: usize,
    pub users_verified: usize,
    pub manifest_hash: String,
    pub version: String,
    pub mc_sims: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub version: String,
    pub manifest_hash: String,
    pub mc_sims: usize,
    pub sweep: Sweep,
    pub cluster: usize,
    /// Keywords of the generated query set; absent with explicit candidates.
    pub query_keywords: Option<[String; 2]>,
    pub rows: Vec<BenchRow>,
}

const TSV_COLUMNS: &str = "method\tparam\tvalue\tk\tpc\tb\talpha\tbrknn_ms\tsampling_ms\tselection_ms\ttotal_ms\tinfluence\tinfluence_se\trr_sets\titerations\tpruned_by_score\tpruned_borders\tpruned_nodes\tpruned_outside\tusers_verified\tmanifest_hash\tversion\tmc_sims";

impl BenchReport {
    pub fn to_tsv(&self) -> String {
        let mut s = format!("{TSV_COLUMNS}\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.method,
                r.param.name(),
                r.value,
                r.k,
                r.pc,
                r.b,
                r.alpha,
                r.brknn_ms,
                r.sampling_ms,
                r.selection_ms,
                r.total_ms,
                r.influence,
                r.influence_se,
                r.rr_sets,
                r.iterations,
                r.pruned_by_score,
                r.pruned_borders,
                r.pruned_nodes,
                r.pruned_outside,
                r.users_verified,
                r.manifest_hash,
                r.version,
                r.mc_sims
            ));
        }
        s
    }
}

/// Seeds of a selection under the exact reverse top-k sets of `inst`.
fn seeds_of(inst: &Instance<'_>, pois: &[PoiId]) -> Vec<UserId> {
    let mut s: Vec<UserId> = pois
        .iter()
        .flat_map(|&p| inst.brknn.members_of(p).unwrap_or(&[]).iter().copied())
        .collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Runs every method at every point of the sweep. All methods at a point
/// share the dataset, index, candidates and evaluation worlds.
pub fn run_benchmark(
    ds: &GeoSocialDataset,
    index: &IgNvdIndex,
    cfg: &SuiteConfig,
) -> Result<BenchReport> {
    if cfg.methods.is_empty() {
        bail!("no methods requested");
    }
    if cfg.values.is_empty() {
        bail!("no sweep values");
    }
    if !(1..=4).contains(&cfg.cluster) {
        bail!("cluster must be in 1..=4");
    }
    let max_pc = match cfg.sweep {
        Sweep::Pc => cfg.values.iter().fold(0.0f64, |a, &b| a.max(b)) as usize,
        _ => cfg.fixed.2,
    };
    let (cluster, query_keywords) = match &cfg.candidates {
        Some(c) => (c.clone(), None),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.query_seed);
            let queries =
                generate_query_set(ds, max_pc, index.config.frequency_threshold, &mut rng)?;
            let kw = |t: u32| ds.vocab.term(t).to_string();
            (
                queries.cluster(cfg.cluster).to_vec(),
                Some([kw(queries.keywords[0]), kw(queries.keywords[1])]),
            )
        }
    };
    let manifest_hash = manifest_of(ds).content_hash;
    let version = env!("CARGO_PKG_VERSION").to_string();
    let mut rows = Vec::new();
    // Reverse top-k sets do not depend on b, so a b sweep computes them once.
    let mut shared: Option<Instance<'_>> = None;
    for &value in &cfg.values {
        let (mut b, mut k, mut pc, mut alpha) = cfg.fixed;
        match cfg.sweep {
            Sweep::B => b = value as usize,
            Sweep::K => k = value as usize,
            Sweep::Pc => pc = value as usize,
            Sweep::Alpha => alpha = value,
        }
        let spec = QuerySpec {
            pois: cluster[..pc.min(cluster.len())].to_vec(),
            b,
            k,
            alpha,
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            seed: cfg.seed,
        };
        let inst = match (&shared, cfg.sweep) {
            (Some(s), Sweep::B) => s.with_budget(b)?,
            _ => Instance::prepare(&spec, ds, index)?,
        };
        let outs = cfg
            .methods
            .iter()
            .map(|&m| solve_prepared(m, &inst, &cfg.solver))
            .collect::<Result<Vec<_>, _>>()?;
        let seeds: Vec<Vec<UserId>> = outs.iter().map(|o| seeds_of(&inst, &o.pois)).collect();
        let refs: Vec<&[UserId]> = seeds.iter().map(Vec::as_slice).collect();
        let mc = estimate_influence_paired(
            &ds.social,
            &refs,
            cfg.mc_sims,
            cfg.seed ^ 0xbe4c_0000_0000_0000,
        )?;
        let st = &inst.brknn.stats;
        for (o, est) in outs.iter().zip(&mc.estimates) {
            rows.push(BenchRow {
                method: o.method,
                param: cfg.sweep,
                value,
                k,
                pc: spec.pois.len(),
                b,
                alpha,
                pois: o.pois.iter().map(|&p| ds.ids.pois[p as usize]).collect(),
                brknn_ms: o.timings.brknn_ms,
                sampling_ms: o.timings.sampling_ms,
                selection_ms: o.timings.selection_ms,
                total_ms: o.timings.total_ms,
                influence: est.mean,
                influence_se: est.stderr,
                estimate: o.estimate,
                ratio: o.ratio,
                rr_sets: o.rr_sets,
                iterations: o.iterations,
                pruned_by_score: st.pruned_by_score,
                pruned_borders: st.pruned_borders,
                pruned_nodes: st.pruned_nodes,
                pruned_outside: st.pruned_outside,
                users_verified: st.users_verified,
                manifest_hash: manifest_hash.clone(),
                version: version.clone(),
                mc_sims: cfg.mc_sims,
            });
        }
        if cfg.sweep == Sweep::B && shared.is_none() {
            shared = Some(inst);
        }
    }
    Ok(BenchReport {
        version,
        manifest_hash,
        mc_sims: cfg.mc_sims,
        sweep: cfg.sweep,
        cluster: cfg.cluster,
        query_keywords,
        rows,
    })
}

pub fn run(a: BenchArgs) -> Result<()> {
    let (ds, index) = load_pair(&a.index, a.dataset.as_deref())?;
    let values = match &a.values {
        Some(v) => v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow::anyhow!("bad sweep value '{s}'"))
            })
            .collect::<Result<Vec<_>>>()?,
        None => a.sweep.default_values(),
    };
    let methods = a
        .methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<Method>, _>>()?;
    let cfg = SuiteConfig {
        sweep: a.sweep,
        values,
        fixed: (a.b, a.k, a.pc, a.alpha),
        methods,
        candidates: a
            .pois
            .as_deref()
            .map(|p| resolve_pois(&ds, p))
            .transpose()?,
        cluster: a.cluster,
        query_seed: a.query_seed,
        seed: a.seed,
        mc_sims: a.mc_sims,
        epsilon: a.epsilon,
        delta: a.delta.unwrap_or_else(|| default_delta(&ds)),
        solver: SolverConfig::default(),
    };
    let report = run_benchmark(&ds, &index, &cfg)?;
    emit(Some(&a.out.with_extension("tsv")), &report.to_tsv())?;
    emit(
        Some(&a.out.with_extension("json")),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    eprintln!(
        "{} rows written to {}.{{tsv,json}}",
        report.rows.len(),
        a.out.display()
    );
    Ok(())
}
