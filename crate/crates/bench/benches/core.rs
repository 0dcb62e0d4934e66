use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use gsmi_core::brknn::{batch_brknn, topk_gsk, QueryContext};
use gsmi_core::datagen::{generate, GenConfig, Preset, RoadModel};
use gsmi_core::ignvd::{IgNvdIndex, IndexConfig};
use gsmi_core::influence::{
    estimate_influence_mc, greedy_hybrid, greedy_max_coverage, local_influence_2hop, RrCollection,
    RrMode,
};
use gsmi_core::scoring::ScoreParams;
use gsmi_core::solvers::{solve_prepared, Instance, Method, QuerySpec, SolverConfig};
use gsmi_core::{DistanceStrategy, GeoSocialDataset, PoiId, UserId};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const USERS: usize = 3000;
const POIS: usize = 800;
const CANDIDATES: usize = 40;

fn world() -> GeoSocialDataset {
    let mut cfg = GenConfig::preset(Preset::Toy1, 11);
    cfg.road = RoadModel::Grid {
        width: 40,
        height: 40,
        min_len: 60,
        max_len: 240,
    };
    cfg.users = USERS;
    cfg.pois = POIS;
    cfg.vocab_size = 60;
    cfg.friends_per_user = 3;
    generate(&cfg).expect("generator")
}

fn index(ds: &GeoSocialDataset, oracle: DistanceStrategy) -> IgNvdIndex {
    IgNvdIndex::build(
        ds,
        IndexConfig {
            frequency_threshold: 20,
            oracle,
            ..IndexConfig::default()
        },
    )
    .expect("index")
}

fn candidates() -> Vec<PoiId> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    sample(&mut rng, POIS, CANDIDATES)
        .into_iter()
        .map(|i| i as PoiId)
        .collect()
}

fn spec(b: usize) -> QuerySpec {
    QuerySpec {
        pois: candidates(),
        b,
        k: 10,
        alpha: 0.6,
        epsilon: 0.1,
        delta: 1.0 / USERS as f64,
        seed: 1,
    }
}

fn bench_index(c: &mut Criterion) {
    let ds = world();
    let mut g = c.benchmark_group("index");
    g.sample_size(10);
    for (name, oracle) in [
        ("dijkstra", DistanceStrategy::Dijkstra),
        ("hub_labels", DistanceStrategy::HubLabels),
    ] {
        g.bench_function(name, |b| b.iter(|| index(black_box(&ds), oracle)));
    }
    g.finish();
}

fn bench_brknn(c: &mut Criterion) {
    let ds = world();
    let idx = index(&ds, DistanceStrategy::HubLabels);
    let ctx = QueryContext::checked(&ds, &idx, ScoreParams::new(0.6).unwrap()).unwrap();
    let pois = candidates();
    let mut g = c.benchmark_group("brknn");
    g.sample_size(10);
    g.bench_function("topk_gsk_k10", |b| {
        let mut u: UserId = 0;
        b.iter(|| {
            u = (u + 97) % USERS as UserId;
            topk_gsk(&ctx, black_box(u), 10)
        })
    });
    g.bench_function("batch_40_pois_k10", |b| {
        b.iter(|| batch_brknn(&ctx, black_box(&pois), 10).unwrap())
    });
    g.finish();
}

fn bench_influence(c: &mut Criterion) {
    let ds = world();
    let idx = index(&ds, DistanceStrategy::HubLabels);
    let inst = Instance::prepare(&spec(5), &ds, &idx).unwrap();
    let g = inst.graph();
    let cands = inst.candidates();
    let seeds: Vec<UserId> = inst
        .brknn
        .members
        .iter()
        .take(5)
        .flatten()
        .copied()
        .collect();

    let mut grp = c.benchmark_group("influence");
    grp.sample_size(20);
    for (name, mode) in [
        ("rr_full_20k", RrMode::Full),
        ("rr_beyond2hop_20k", RrMode::Beyond2Hop),
    ] {
        grp.bench_function(name, |b| {
            b.iter_batched(
                || RrCollection::new(mode, cands.len(), 3),
                |mut r| {
                    r.grow_to(&g, 20_000);
                    r
                },
                BatchSize::LargeInput,
            )
        });
    }
    let mut full = RrCollection::new(RrMode::Full, cands.len(), 3);
    full.grow_to(&g, 50_000);
    grp.bench_function("greedy_coverage_b5", |b| {
        b.iter(|| greedy_max_coverage(&full, black_box(&cands), 5))
    });
    let mut remote = RrCollection::new(RrMode::Beyond2Hop, cands.len(), 3);
    remote.grow_to(&g, 50_000);
    grp.bench_function("greedy_hybrid_b5", |b| {
        b.iter(|| greedy_hybrid(&g, &remote, black_box(&cands), 5).unwrap())
    });
    grp.bench_function("local_2hop", |b| {
        b.iter(|| local_influence_2hop(&ds.social, black_box(&seeds)))
    });
    grp.bench_function("mc_1000", |b| {
        b.iter(|| estimate_influence_mc(&ds.social, black_box(&seeds), 1000, 7).unwrap())
    });
    grp.finish();
}

fn bench_solvers(c: &mut Criterion) {
    let ds = world();
    let idx = index(&ds, DistanceStrategy::HubLabels);
    let inst = Instance::prepare(&spec(5), &ds, &idx).unwrap();
    let cfg = SolverConfig::default();
    let mut g = c.benchmark_group("solve_prepared");
    g.sample_size(10);
    for m in [Method::Ba, Method::Ap, Method::He, Method::Maxbrknn] {
        g.bench_function(m.name(), |b| {
            b.iter(|| solve_prepared(m, &inst, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_index,
    bench_brknn,
    bench_influence,
    bench_solvers
);
criterion_main!(benches);
