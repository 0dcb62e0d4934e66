//! The sampling solvers: BA with full RR sets, AP with the hybrid estimator.

use std::time::Instant;

use crate::error::Result;
use crate::influence::{
    coverage_lower_bound, eta_ap, greedy_hybrid, greedy_local_2hop, greedy_max_coverage,
    greedy_ratio, hybrid_value, i_max, influence_lower_bound, influence_upper_bound_opt,
    local_influence_2hop, theta_max, theta_zero, upper_coverage, BoundMode, HeterogeneousGraph,
    RrCollection, RrMode,
};

use super::policies::greedy_cover;
use super::{ms, Instance, Method, SolverConfig, SolverOutcome, Timings};

/// Seeds of the selection and validation collections.
pub(crate) fn collection_seeds(seed: u64) -> (u64, u64) {
    (seed ^ 0x5151_0000_0000_0001, seed ^ 0xa2a2_0000_0000_0002)
}

/// Result when no candidate has any reverse top-k user: every selection has
/// influence 0.
fn degenerate(inst: &Instance<'_>, method: Method) -> SolverOutcome {
    let mut out = SolverOutcome::plain(method, inst.spec.pois[..inst.spec.b].to_vec());
    out.estimate = Some(0.0);
    out.lower = Some(0.0);
    out.upper = Some(0.0);
    out.ratio = Some(1.0);
    out.certified = true;
    out
}

struct Round {
    picks: Vec<u32>,
    estimate: f64,
    lower: f64,
    upper: f64,
}

/// Doubles two RR collections until the bound ratio clears
/// `1 - 1/e - eps`, `rounds` runs out or the next doubling would pass the cap.
fn doubling(
    inst: &Instance<'_>,
    cfg: &SolverConfig,
    g: &HeterogeneousGraph<'_>,
    mode: RrMode,
    theta0: usize,
    rounds: Option<u32>,
    mut round: impl FnMut(&RrCollection, &RrCollection) -> Result<Round>,
) -> Result<SolverOutcome> {
    let method = if mode == RrMode::Full {
        Method::Ba
    } else {
        Method::Ap
    };
    let target = greedy_ratio() - inst.spec.epsilon;
    let (s1, s2) = collection_seeds(inst.spec.seed);
    let nc = inst.spec.pois.len();
    let mut r1 = RrCollection::new(mode, nc, s1);
    let mut r2 = RrCollection::new(mode, nc, s2);
    let half_cap = (cfg.max_rr_sets / 2).max(1);
    let mut size = theta0.min(half_cap);
    let mut capped = theta0 > half_cap;
    let mut timings = Timings::default();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let t = Instant::now();
        r1.grow_to(g, size);
        r2.grow_to(g, size);
        timings.sampling_ms += ms(t);
        let t = Instant::now();
        let res = round(&r1, &r2)?;
        timings.selection_ms += ms(t);
        let ratio = if res.upper > 0.0 {
            res.lower / res.upper
        } else {
            1.0
        };
        let certified = ratio >= target;
        let last_round = rounds.is_some_and(|r| iterations as u32 >= r);
        let next_over_cap = size.saturating_mul(2) > half_cap;
        if certified || last_round || next_over_cap || capped {
            capped = capped || (!certified && !last_round && next_over_cap);
            return Ok(SolverOutcome {
                method,
                pois: inst.to_pois(&res.picks),
                estimate: Some(res.estimate),
                lower: Some(res.lower),
                upper: Some(res.upper),
                ratio: Some(ratio),
                certified,
                capped,
                iterations,
                rr_sets: r1.len() + r2.len(),
                timings,
            });
        }
        size *= 2;
    }
}

/// BA: full-mode RR sets, coverage-only bounds. The greedy reverse top-k
/// cover's seed count stands in for the optimum when sizing the first round.
pub fn solve_ba_prepared(inst: &Instance<'_>, cfg: &SolverConfig) -> Result<SolverOutcome> {
    let spec = &inst.spec;
    let g = inst.graph();
    let n = g.num_users();
    let cands = inst.candidates();
    let cover = greedy_cover(&inst.brknn.members, n, spec.b);
    let psi = g.seeds(&cover).len() as f64;
    if psi == 0.0 {
        return Ok(degenerate(inst, Method::Ba));
    }
    let tmax = theta_max(n, cands.len(), spec.b, spec.epsilon, spec.delta, psi)?;
    let t0 = theta_zero(tmax, spec.epsilon, psi, n);
    // One union-bound slot per round that fits under the cap, two bounds each.
    let rounds = (((cfg.max_rr_sets / 2).max(1) as f64 / t0)
        .log2()
        .floor()
        .max(0.0)
        + 1.0) as u32;
    let eta = (2.0 * rounds as f64 / spec.delta).ln();
    doubling(inst, cfg, &g, RrMode::Full, t0 as usize, None, |r1, r2| {
        let picks = greedy_max_coverage(r1, &cands, spec.b);
        let cov2 = r2.coverage(&picks);
        Ok(Round {
            estimate: r2.scaled(cov2, n),
            lower: coverage_lower_bound(cov2 as f64, r2.len(), n, eta),
            upper: influence_upper_bound_opt(
                upper_coverage(r1, &cands, spec.b),
                r1.len(),
                n,
                eta,
                BoundMode::Ba,
                0.0,
            ),
            picks,
        })
    })
}

/// AP: exact two-hop influence plus beyond-two-hop RR sets, stopping after
/// at most `i_max` rounds.
pub fn solve_ap_prepared(inst: &Instance<'_>, cfg: &SolverConfig) -> Result<SolverOutcome> {
    let spec = &inst.spec;
    let g = inst.graph();
    let n = g.num_users();
    let cands = inst.candidates();
    let local_pick = greedy_local_2hop(&g, &cands, spec.b);
    let psi = local_influence_2hop(g.social, &g.seeds(&local_pick));
    if psi <= 0.0 {
        return Ok(degenerate(inst, Method::Ap));
    }
    let tmax = theta_max(n, cands.len(), spec.b, spec.epsilon, spec.delta, psi)?;
    let t0 = theta_zero(tmax, spec.epsilon, psi, n);
    let rounds = i_max(tmax, t0);
    let eta = eta_ap(rounds, spec.delta);
    doubling(
        inst,
        cfg,
        &g,
        RrMode::Beyond2Hop,
        t0 as usize,
        Some(rounds),
        |r1, r2| {
            let picks = greedy_hybrid(&g, r1, &cands, spec.b)?;
            let local = local_influence_2hop(g.social, &g.seeds(&picks));
            Ok(Round {
                estimate: hybrid_value(&g, r2, &picks)?,
                lower: influence_lower_bound(
                    r2.coverage(&picks),
                    r2.len(),
                    n,
                    eta,
                    BoundMode::Ap,
                    local,
                ),
                upper: influence_upper_bound_opt(
                    upper_coverage(r1, &cands, spec.b),
                    r1.len(),
                    n,
                    eta,
                    BoundMode::Ap,
                    psi,
                ),
                picks,
            })
        },
    )
}
