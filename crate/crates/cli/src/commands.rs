use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde_json::json;

use gsmi_core::brknn::{batch_brknn_with, BrknnCache, BrknnConfig, QueryContext};
use gsmi_core::datagen::{generate, GenConfig, Preset};
use gsmi_core::geo::{load_dataset, write_dataset};
use gsmi_core::ignvd::{IgNvdIndex, IndexConfig};
use gsmi_core::oracles::{oracle_brknn, oracle_influence, oracle_topk, InfluenceMode};
use gsmi_core::scoring::ScoreParams;
use gsmi_core::solvers::{solve as run_solver, Method, QuerySpec, SolverConfig};
use gsmi_core::{DistanceStrategy, GeoSocialDataset, PoiId, UserId};

use crate::ids::{external_pois, load_pair, parse_id_list, resolve_pois};

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// toy-1, desk-1 or bench-1.
    #[arg(long, default_value = "toy-1")]
    preset: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

pub fn gen(a: GenArgs) -> Result<()> {
    let preset: Preset = a.preset.parse()?;
    let ds = generate(&GenConfig::preset(preset, a.seed))?;
    let manifest = write_dataset(&ds, &a.out)?;
    emit(None, &pretty(&manifest))
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OracleKind {
    Dijkstra,
    HubLabels,
}

#[derive(Args)]
pub struct BuildIndexArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Keyword POI frequency from which a keyword gets a Voronoi diagram
    /// (default: 3 below 1000 POIs, else 50).
    #[arg(long)]
    threshold: Option<u32>,
    #[arg(long, default_value_t = 4)]
    fanout: usize,
    #[arg(long, default_value_t = 64)]
    leaf_capacity: usize,
    /// Distance oracle stored in the index.
    #[arg(long, value_enum, default_value = "hub-labels")]
    oracle: OracleKind,
    /// Keep nearest-neighbour maps uncompressed.
    #[arg(long)]
    no_compress: bool,
    #[arg(long)]
    out: PathBuf,
}

pub fn build_index(a: BuildIndexArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let start = Instant::now();
    let config = IndexConfig {
        fanout: a.fanout,
        leaf_capacity: a.leaf_capacity,
        frequency_threshold: a
            .threshold
            .unwrap_or(if ds.num_pois() < 1000 { 3 } else { 50 }),
        oracle: match a.oracle {
            OracleKind::Dijkstra => DistanceStrategy::Dijkstra,
            OracleKind::HubLabels => DistanceStrategy::HubLabels,
        },
        compress: !a.no_compress,
    };
    let mut index = IgNvdIndex::build(&ds, config)?;
    let dir = a.dataset.canonicalize().unwrap_or(a.dataset.clone());
    index.dataset_path = Some(dir.to_string_lossy().into_owned());
    index.save(&a.out)?;
    emit(
        None,
        &pretty(&json!({
            "index": a.out,
            "dataset_hash": index.dataset_hash,
            "gtree_nodes": index.gtree.len(),
            "build_ms": start.elapsed().as_secs_f64() * 1e3,
        })),
    )
}

#[derive(Args)]
pub struct BrknnArgs {
    #[arg(long)]
    index: PathBuf,
    /// Dataset directory (default: the one recorded in the index).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Candidate POI ids: `1,2,3` or `@file`.
    #[arg(long)]
    pois: String,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// TSV output (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON statistics (default: `<out>.stats.json`, or stderr without --out).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Include every pruning decision in the statistics.
    #[arg(long)]
    trace: bool,
}

pub fn brknn(a: BrknnArgs) -> Result<()> {
    let (ds, index) = load_pair(&a.index, a.dataset.as_deref())?;
    let pois = resolve_pois(&ds, &a.pois)?;
    let ctx = QueryContext::new(&ds, &index, ScoreParams::new(a.alpha)?)?;
    let cfg = BrknnConfig {
        trace: a.trace,
        ..BrknnConfig::new(a.k)
    };
    let res = batch_brknn_with(&ctx, &pois, &cfg, &BrknnCache::new(a.k, a.alpha))?;
    let mut tsv = String::from("poi_id\tuser_id\n");
    for (p, members) in res.pois.iter().zip(&res.members) {
        for &u in members {
            tsv.push_str(&format!(
                "{}\t{}\n",
                ds.ids.pois[*p as usize], ds.ids.users[u as usize]
            ));
        }
    }
    emit(a.out.as_ref(), &tsv)?;
    let mut stats = json!({ "k": a.k, "alpha": a.alpha, "stats": res.stats });
    if a.trace {
        stats["trace"] = serde_json::to_value(&res.trace)?;
    }
    let text = pretty(&stats);
    match (a.stats, a.out) {
        (Some(p), _) => emit(Some(&p), &text),
        (None, Some(out)) => emit(
            Some(&PathBuf::from(format!("{}.stats.json", out.display()))),
            &text,
        ),
        (None, None) => {
            eprint!("{text}");
            Ok(())
        }
    }
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// ba, ap, he, relevance, influencer, maxbrknn or random.
    #[arg(long, default_value = "ap")]
    method: String,
    /// Candidate POI ids: `1,2,3` or `@file`.
    #[arg(long)]
    pois: String,
    #[arg(long, default_value_t = 5)]
    b: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Failure probability (default: 1 / number of users).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on RR sets across both collections.
    #[arg(long, default_value_t = 1 << 26)]
    max_rr_sets: usize,
    /// Users verified per HE round.
    #[arg(long, default_value_t = 256)]
    he_batch: usize,
    /// Result JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn default_delta(ds: &GeoSocialDataset) -> f64 {
    (1.0 / ds.num_users().max(2) as f64).min(0.5)
}

pub fn solve(a: SolveArgs) -> Result<()> {
    let method: Method = a.method.parse()?;
    let (ds, index) = load_pair(&a.index, a.dataset.as_deref())?;
    let spec = QuerySpec {
        pois: resolve_pois(&ds, &a.pois)?,
        b: a.b,
        k: a.k,
        alpha: a.alpha,
        epsilon: a.epsilon,
        delta: a.delta.unwrap_or_else(|| default_delta(&ds)),
        seed: a.seed,
    };
    let cfg = SolverConfig {
        max_rr_sets: a.max_rr_sets,
        he_batch: a.he_batch,
        ..SolverConfig::default()
    };
    let out = run_solver(method, &spec, &ds, &index, &cfg)?;
    let mut v = serde_json::to_value(&out)?;
    v["P_s"] = json!(external_pois(&ds, &out.pois));
    emit(a.out.as_ref(), &pretty(&v))
}

#[derive(Subcommand)]
pub enum OracleCommand {
    /// Top-k POIs of one user by scoring every POI.
    Topk {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        user: u64,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 0.6)]
        alpha: f64,
    },
    /// Reverse top-k users by running the top-k oracle for every user.
    Brknn {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        pois: String,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 0.6)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Influence of a seed set, given directly or as the reverse top-k users of POIs.
    Influence {
        #[arg(long)]
        dataset: PathBuf,
        /// Seed user ids.
        #[arg(long, conflicts_with = "pois", required_unless_present = "pois")]
        seeds: Option<String>,
        /// Candidate POIs whose reverse top-k users form the seeds.
        #[arg(long)]
        pois: Option<String>,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 0.6)]
        alpha: f64,
        /// exact or mc.
        #[arg(long, default_value = "mc")]
        mode: String,
        #[arg(long, default_value_t = 10_000)]
        sims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn user_id(ds: &GeoSocialDataset, external: u64) -> Result<UserId> {
    ds.ids
        .user_index(external)
        .ok_or_else(|| anyhow!("unknown user id {external}"))
}

pub fn oracle(c: OracleCommand) -> Result<()> {
    match c {
        OracleCommand::Topk {
            dataset,
            user,
            k,
            alpha,
        } => {
            let ds = load_dataset(&dataset)?;
            let top = oracle_topk(&ds, &ScoreParams::new(alpha)?, user_id(&ds, user)?, k);
            let rows: Vec<_> = top
                .iter()
                .map(|&(p, s)| json!({ "poi": ds.ids.pois[p as usize], "score": s }))
                .collect();
            emit(None, &pretty(&rows))
        }
        OracleCommand::Brknn {
            dataset,
            pois,
            k,
            alpha,
            out,
        } => {
            let ds = load_dataset(&dataset)?;
            let pois = resolve_pois(&ds, &pois)?;
            let members = oracle_brknn(&ds, &ScoreParams::new(alpha)?, &pois, k);
            let mut tsv = String::from("poi_id\tuser_id\n");
            for (p, m) in pois.iter().zip(&members) {
                for &u in m {
                    tsv.push_str(&format!(
                        "{}\t{}\n",
                        ds.ids.pois[*p as usize], ds.ids.users[u as usize]
                    ));
                }
            }
            emit(out.as_ref(), &tsv)
        }
        OracleCommand::Influence {
            dataset,
            seeds,
            pois,
            k,
            alpha,
            mode,
            sims,
            seed,
        } => {
            let ds = load_dataset(&dataset)?;
            let users: Vec<UserId> = match (seeds, pois) {
                (Some(s), _) => parse_id_list(&s)?
                    .into_iter()
                    .map(|u| user_id(&ds, u))
                    .collect::<Result<_>>()?,
                (None, Some(p)) => {
                    let pois: Vec<PoiId> = resolve_pois(&ds, &p)?;
                    let mut all: Vec<UserId> =
                        oracle_brknn(&ds, &ScoreParams::new(alpha)?, &pois, k)
                            .into_iter()
                            .flatten()
                            .collect();
                    all.sort_unstable();
                    all.dedup();
                    all
                }
                (None, None) => unreachable!("clap requires one of --seeds and --pois"),
            };
            let mode = match mode.as_str() {
                "exact" => InfluenceMode::Exact,
                "mc" => InfluenceMode::Mc { sims, seed },
                other => return Err(anyhow!("unknown mode '{other}' (expected exact or mc)")),
            };
            let (value, stderr) = oracle_influence(&ds.social, &users, mode)?;
            emit(
                None,
                &pretty(&json!({ "seeds": users.len(), "influence": value, "stderr": stderr })),
            )
        }
    }
}
