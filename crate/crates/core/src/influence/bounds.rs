//! Confidence bounds on influence and RR sample sizes.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const ONE_MINUS_INV_E: f64 = 1.0 - 0.367_879_441_171_442_33;

/// `1 - 1/e`.
pub fn greedy_ratio() -> f64 {
    ONE_MINUS_INV_E
}

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Lower confidence bound on influence from a coverage count, scaled to users:
/// `((sqrt(cov + 2 eta / 9) - sqrt(eta / 2))^2 - eta / 18) * n / |R|`. The
/// inner difference is clamped at 0 so the bound is non-decreasing in `cov`
/// and never negative.
pub fn coverage_lower_bound(coverage: f64, sets: usize, users: usize, eta: f64) -> f64 {
    if sets == 0 {
        return 0.0;
    }
    let root = ((coverage + 2.0 * eta / 9.0).sqrt() - (eta / 2.0).sqrt()).max(0.0);
    (root * root - eta / 18.0).max(0.0) * users as f64 / sets as f64
}

/// Upper confidence bound: `(sqrt(cov_u + eta / 2) + sqrt(eta / 2))^2 * n / |R|`.
/// Infinite for an empty collection.
pub fn coverage_upper_bound(upper_coverage: f64, sets: usize, users: usize, eta: f64) -> f64 {
    if sets == 0 {
        return f64::INFINITY;
    }
    let root = (upper_coverage + eta / 2.0).sqrt() + (eta / 2.0).sqrt();
    root * root * users as f64 / sets as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// Coverage only.
    Ba,
    /// Coverage plus the exact two-hop local term.
    Ap,
}

/// Lower bound on the influence of a selected set. `local` is its two-hop
/// influence, used in AP mode only.
pub fn influence_lower_bound(
    coverage: usize,
    sets: usize,
    users: usize,
    eta: f64,
    mode: BoundMode,
    local: f64,
) -> f64 {
    let remote = coverage_lower_bound(coverage as f64, sets, users, eta);
    match mode {
        BoundMode::Ba => remote,
        BoundMode::Ap => local + remote,
    }
}

/// Upper bound on the optimal influence. `local_greedy` is the two-hop
/// influence of the two-hop greedy pick, used in AP mode only.
pub fn influence_upper_bound_opt(
    upper_coverage: f64,
    sets: usize,
    users: usize,
    eta: f64,
    mode: BoundMode,
    local_greedy: f64,
) -> f64 {
    let remote = coverage_upper_bound(upper_coverage, sets, users, eta);
    match mode {
        BoundMode::Ba => remote,
        BoundMode::Ap => local_greedy / ONE_MINUS_INV_E + remote,
    }
}

/// Sample size beyond which the greedy pick is a `(1 - 1/e - eps)`
/// approximation with probability at least `1 - delta / 3`; `psi` is a lower
/// estimate of the optimal influence.
pub fn theta_max(
    users: usize,
    candidates: usize,
    b: usize,
    eps: f64,
    delta: f64,
    psi: f64,
) -> Result<f64> {
    if psi <= 0.0 {
        return Err(Error::Param("influence estimate must be positive".into()));
    }
    check_eps_delta(eps, delta)?;
    let l6 = (6.0 / delta).ln();
    let lc = ln_choose(candidates as u64, b as u64);
    let a = ONE_MINUS_INV_E * l6.sqrt() + (ONE_MINUS_INV_E * (lc + l6)).sqrt();
    Ok((2.0 * users as f64 * a * a / (eps * eps * psi)).ceil())
}

/// Initial sample size: `ceil(theta_max * eps^2 * psi / n)`, at least 1.
pub fn theta_zero(theta_max: f64, eps: f64, psi: f64, users: usize) -> f64 {
    (theta_max * eps * eps * psi / users as f64).ceil().max(1.0)
}

/// Number of doubling rounds, `ceil(log2(theta_max / theta_0))`, at least 1.
pub fn i_max(theta_max: f64, theta_zero: f64) -> u32 {
    ((theta_max / theta_zero).log2().ceil()).max(1.0) as u32
}

/// `ln(3 i_max / delta)`.
pub fn eta_ap(i_max: u32, delta: f64) -> f64 {
    (3.0 * i_max as f64 / delta).ln()
}

pub(crate) fn check_eps_delta(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Param(format!("epsilon {eps} outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Param(format!("delta {delta} outside (0, 1)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_coverage_gives_zero_lower_bound() {
        assert_eq!(coverage_lower_bound(0.0, 100, 50, 3.0), 0.0);
        assert_eq!(coverage_lower_bound(5.0, 0, 50, 3.0), 0.0);
    }

    #[test]
    fn empty_collection_upper_bound() {
        assert_eq!(coverage_upper_bound(0.0, 0, 10, 1.0), f64::INFINITY);
        assert!((coverage_upper_bound(0.0, 10, 10, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn choose_edge_cases() {
        assert!(ln_choose(10, 10).abs() < 1e-12);
        assert!((ln_choose(10, 3) - 120f64.ln()).abs() < 1e-10);
        assert!((ln_choose(60, 5) - 5_461_512f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn theta_scaling() {
        let a = theta_max(1000, 60, 5, 0.1, 0.01, 10.0).unwrap();
        let b = theta_max(1000, 60, 5, 0.1, 0.01, 20.0).unwrap();
        assert!((a / 2.0 - b).abs() <= 1.0);
        assert!(theta_max(1000, 60, 5, 0.1, 0.01, 0.0).is_err());
        let t = theta_max(1000, 8, 3, 1.0 - 1e-9, 0.5, 1000.0).unwrap();
        assert_eq!(theta_zero(t, 1.0, 1000.0, 1000), t);
        assert_eq!(theta_zero(1e6, 0.1, 1e-9, 1000), 1.0);
    }

    #[test]
    fn theta_spot_value() {
        // n=1000, |Pc|=60, b=5, eps=0.1, delta=0.01, psi=10:
        // 2*1000*((1-1/e)*sqrt(ln 600) + sqrt((1-1/e)(ln C(60,5) + ln 600)))^2 / (0.01*10)
        let c = 1.0 - (-1.0f64).exp();
        let l6 = 600f64.ln();
        let a = c * l6.sqrt() + (c * (5_461_512f64.ln() + l6)).sqrt();
        let want = (2.0 * 1000.0 * a * a / 0.1).ceil();
        assert_eq!(theta_max(1000, 60, 5, 0.1, 0.01, 10.0).unwrap(), want);
    }

    #[test]
    fn rounds_and_eta() {
        assert_eq!(i_max(1024.0, 1.0), 10);
        assert_eq!(i_max(5.0, 10.0), 1);
        assert!((eta_ap(10, 0.3) - 100f64.ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn lower_bound_is_monotone(cov in 0.0f64..1e4, step in 0.0f64..100.0, eta in 0.01f64..30.0) {
            let a = coverage_lower_bound(cov, 1000, 500, eta);
            let b = coverage_lower_bound(cov + step, 1000, 500, eta);
            prop_assert!(a >= 0.0 && b >= a);
            prop_assert!(a <= cov * 500.0 / 1000.0 + 1e-9);
            prop_assert!(coverage_upper_bound(cov, 1000, 500, eta) >= cov * 0.5);
        }
    }
}
