//! Gamma-ratio domination of the Laplace series for rules below `C0 (i+1)`.
//!
//! With `beta = lambda / C0`,
//! `prod_{j<=i} C0 (j+1) / (C0 (j+1) + lambda) = Gamma(i+2) Gamma(1+beta) / Gamma(i+2+beta)`,
//! and `Gamma(i+2) / Gamma(i+2+beta) <= C1 (i+1)^{-beta}` holds with `C1 = 1`
//! for every `beta > 0`: for `beta <= 1` by Wendel's inequality, and for
//! `beta = m + s` by peeling off the `m` integer factors first.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::CompensatedSum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRow {
    pub i: u64,
    /// `Gamma(i+2) Gamma(1+beta) / Gamma(i+2+beta)`
    pub term: f64,
    /// `Gamma(i+2) / Gamma(i+2+beta) * (i+1)^beta`
    pub c1_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaReport {
    pub c0: f64,
    pub lambda: f64,
    pub beta: f64,
    pub rows: Vec<GammaRow>,
    /// Smallest `C1` that works for `i <= N`.
    pub c1_fitted: f64,
    /// `C1` valid for every `i`.
    pub c1_certified: f64,
    pub partial_sum: f64,
    /// Exact remainder `t_N (N+2) / (beta - 1)` of the series; infinite when
    /// `beta <= 1`.
    pub tail: f64,
    /// `1 / (beta - 1)` for `beta > 1`.
    pub exact_sum: f64,
    /// `C1 Gamma(1+beta) zeta(beta)`, finite exactly when `beta > 1`.
    pub summed_bound: f64,
    pub finite: bool,
}

/// `zeta(s)` for `s > 1` by Euler-Maclaurin with 1000 explicit terms.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    const M: usize = 1000;
    let mut sum = CompensatedSum::default();
    for n in 1..M {
        sum.add((n as f64).powf(-s));
    }
    let m = M as f64;
    let b2 = s * m.powf(-s - 1.0) / 12.0;
    let b4 = s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0;
    sum.value() + m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s) + b2 - b4
}

/// Evaluates the domination chain for `i = 0..=n`.
pub fn gamma_ratio_bound(c0: f64, lambda: f64, n: u64) -> Result<GammaReport> {
    if !(c0 > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidArgument("C0 and lambda must be positive".into()));
    }
    let beta = lambda / c0;
    let lg_scale = ln_gamma(1.0 + beta);
    let mut rows = Vec::with_capacity(n as usize + 1);
    let mut sum = CompensatedSum::default();
    let mut c1_fitted = 0.0f64;
    let mut last_term = 0.0;
    for i in 0..=n {
        let x = (i + 2) as f64;
        let ln_ratio = ln_gamma(x) - ln_gamma(x + beta);
        let term = (ln_ratio + lg_scale).exp();
        let c1_ratio = (ln_ratio + beta * ((i + 1) as f64).ln()).exp();
        c1_fitted = c1_fitted.max(c1_ratio);
        sum.add(term);
        last_term = term;
        rows.push(GammaRow { i, term, c1_ratio });
    }
    let finite = beta > 1.0;
    let (tail, exact_sum, summed_bound) = if finite {
        (
            last_term * (n + 2) as f64 / (beta - 1.0),
            1.0 / (beta - 1.0),
            lg_scale.exp() * zeta(beta),
        )
    } else {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    };
    Ok(GammaReport {
        c0,
        lambda,
        beta,
        rows,
        c1_fitted,
        c1_certified: 1.0,
        partial_sum: sum.value(),
        tail,
        exact_sum,
        summed_bound,
        finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-12);
    }

    #[test]
    fn unit_beta_is_harmonic() {
        let r = gamma_ratio_bound(1.0, 1.0, 50).unwrap();
        for row in &r.rows {
            assert!((row.term - 1.0 / (row.i + 2) as f64).abs() < 1e-13);
        }
        assert!(r.c1_fitted <= 1.0 && r.c1_fitted > 0.98);
        assert!(!r.finite);
    }

    #[test]
    fn beta_three_sums_to_half() {
        let r = gamma_ratio_bound(1.0, 3.0, 10_000).unwrap();
        assert!((r.partial_sum + r.tail - 0.5).abs() < 1e-10);
        assert_eq!(r.exact_sum, 0.5);
    }

    #[test]
    fn certified_constant_dominates_fit() {
        for beta in [0.3, 0.9, 1.0, 1.7, 2.5, 4.2, 9.0] {
            let r = gamma_ratio_bound(1.0, beta, 2000).unwrap();
            assert!(r.c1_fitted <= r.c1_certified + 1e-12, "{beta}");
            if r.finite {
                assert!(r.exact_sum <= r.summed_bound, "{beta}");
            }
        }
    }

    #[test]
    fn direct_summation_oracle() {
        // product form summed term by term, independent of log-gamma
        let beta = 2.5;
        let mut term = 1.0;
        let mut direct = 0.0;
        let n = 200_000u64;
        for i in 0..=n {
            term *= (i + 1) as f64 / ((i + 1) as f64 + beta);
            direct += term;
        }
        let r = gamma_ratio_bound(1.0, 2.5, n).unwrap();
        assert!((r.partial_sum - direct).abs() < 1e-9);
        assert!((r.partial_sum + r.tail - 1.0 / 1.5).abs() < 1e-9);
        assert!(r.summed_bound.is_finite());
    }
}
