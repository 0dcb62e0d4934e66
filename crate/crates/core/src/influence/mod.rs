//! Influence of POI selections under the independent cascade model.
//!
//! Selecting a POI seeds its reverse top-k users. Spread is computed exactly
//! within two hops, estimated with reverse-reachable sets beyond that, and
//! bounded with martingale confidence intervals.

pub mod bounds;
pub mod diffusion;
pub mod graph;
pub mod greedy;
pub mod local;
pub mod rr;

pub use bounds::{
    coverage_lower_bound, coverage_upper_bound, eta_ap, greedy_ratio, i_max, influence_lower_bound,
    influence_upper_bound_opt, ln_choose, theta_max, theta_zero, BoundMode,
};
pub use diffusion::{
    estimate_influence_mc, estimate_influence_paired, exact_influence_possible_worlds, simulate_ic,
    spread_in_world, McEstimate, PairedMc, WorldTable, MAX_EXACT_EDGES,
};
pub use graph::{build_heterogeneous_graph, HeterogeneousGraph};
pub use greedy::{greedy_hybrid, greedy_local_2hop, hybrid_value};
pub use local::{local_influence_2hop, LocalInfluence};
pub use rr::{
    generate_rr_set, greedy_max_coverage, lazy_greedy, upper_coverage, RrCollection, RrMode, RrSet,
    Sampler,
};
