//! The controlled-superlinear constant `kappa` and the `(alpha, K)` witnesses.

use serde::Serialize;

use super::series::{find_lambda, inverse_square_suffix_bounds, symmetric_moment_product, LambdaTarget};
use super::{DEFAULT_RANGE, DEFAULT_TRUNCATION};
use crate::attachment::AttachmentSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaReport {
    /// `sup_{n <= horizon} max_{i <= n} r(i) / r(n)` with `r(i) = f(i)/(i+1)`.
    pub kappa_horizon: f64,
    /// The degree attaining `kappa_horizon`.
    pub argmax: u64,
    pub horizon: u64,
    /// A value valid for every `n`, when the envelopes prove one.
    pub kappa_global: Option<f64>,
    pub certified_global: bool,
}

impl KappaReport {
    /// The certified global value if there is one, else the horizon value.
    pub fn kappa(&self) -> f64 {
        self.kappa_global.unwrap_or(self.kappa_horizon)
    }
}

/// Smallest `kappa` with `max_{i <= n} f(i)/(i+1) <= kappa f(n)/(n+1)` for all
/// `n <= horizon`.
///
/// A global value is certified when the spec has lower and upper envelopes
/// `L (n+1)^p`, `U (n+1)^p` with a common exponent `p >= 1` valid past the
/// horizon. Then for `n > horizon` the left side is at most
/// `max(R, U (n+1)^{p-1})`, `R` the running maximum over the horizon, and the
/// right side at least `L (n+1)^{p-1}`, giving
/// `kappa <= max(kappa_horizon, R / (L (horizon+2)^{p-1}), U / L)`.
pub fn kappa_of(spec: &AttachmentSpec, horizon: u64) -> Result<KappaReport> {
    if !spec.is_deterministic() {
        return Err(Error::UnsupportedSpec("kappa needs a deterministic spec".into()));
    }
    let mut running = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    let mut argmax = 0;
    for n in 0..=horizon {
        let r = spec.ln_weight(n)? - ((n + 1) as f64).ln();
        running = running.max(r);
        if running - r > worst {
            worst = running - r;
            argmax = n;
        }
    }
    let kappa_horizon = worst.exp();
    let env = spec.envelope();
    let kappa_global = match (env.lower, env.upper) {
        (Some(lo), Some(hi))
            if lo.exponent == hi.exponent
                && lo.exponent >= 1.0
                && lo.from <= horizon + 1
                && hi.from <= horizon + 1
                && spec.check_envelope(horizon).is_ok() =>
        {
            let p = lo.exponent;
            let carry = (running - lo.coef.ln() - (p - 1.0) * ((horizon + 2) as f64).ln()).exp();
            Some(kappa_horizon.max(carry).max(hi.coef / lo.coef))
        }
        _ => None,
    };
    Ok(KappaReport {
        kappa_horizon,
        argmax,
        horizon,
        kappa_global,
        certified_global: kappa_global.is_some(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaK {
    /// Rate with `sum_j E exp(-alpha (X_1 + ... + X_j)) < 1`, certified.
    pub alpha: f64,
    /// First `k >= 1` with `eta_k >= alpha`.
    pub k: u64,
    /// `eta_k = (2 sum_{i >= k} 1/x_i^2)^{-1/2}`, using an upper bound on the sum.
    pub eta_k: f64,
    /// The moment product past `K` is at most `e^2`; this is its logarithm.
    pub ln_product_bound: f64,
    /// `ln prod` over degrees `K..=truncation`, evaluated exactly.
    pub ln_product_partial: f64,
    pub truncation: u64,
}

/// Builds `(alpha, K)` for the persistence criterion: `alpha` from
/// [`find_lambda`], then the first `k` whose `eta_k` reaches `alpha`.
pub fn alpha_k_search(spec: &AttachmentSpec, n: u64) -> Result<AlphaK> {
    let suffix = inverse_square_suffix_bounds(spec, n)?.ok_or_else(|| {
        Error::NotFound("sum of 1/x_j^2 is not certified finite".into())
    })?;
    let alpha = find_lambda(spec, LambdaTarget::BelowOne, DEFAULT_RANGE, n)?.lambda;
    let eta = |tail: f64| (0.5 / tail).sqrt();
    let k = match (1..suffix.len()).find(|&k| eta(suffix[k]) >= alpha) {
        Some(k) => k as u64,
        None => {
            // past the truncation: sum_{i >= k} 1/x_i^2 <= c^-2 k^{1-2p}/(2p-1)
            let lo = spec
                .lower_envelope()
                .filter(|b| b.exponent > 0.5)
                .ok_or_else(|| Error::NotFound("no envelope to extend eta_k".into()))?;
            let p = lo.exponent;
            let need = (2.0 * p - 1.0) * lo.coef * lo.coef / (2.0 * alpha * alpha);
            let k = need.powf(1.0 / (1.0 - 2.0 * p)).ceil() as u64;
            k.max(n + 1).max(lo.from)
        }
    };
    let tail = if (k as usize) < suffix.len() {
        suffix[k as usize]
    } else {
        let lo = spec.lower_envelope().expect("checked above");
        let p = lo.exponent;
        (k as f64).powf(1.0 - 2.0 * p) / (lo.coef * lo.coef * (2.0 * p - 1.0))
    };
    let partial = symmetric_moment_product(spec, k, alpha, n.max(k))?;
    Ok(AlphaK {
        alpha,
        k,
        eta_k: eta(tail),
        ln_product_bound: 2.0,
        ln_product_partial: partial.ln_partial,
        truncation: n.max(k),
    })
}

/// [`alpha_k_search`] at the default truncation.
pub fn alpha_k(spec: &AttachmentSpec) -> Result<AlphaK> {
    alpha_k_search(spec, DEFAULT_TRUNCATION)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        let sq = kappa_of(&AttachmentSpec::power(2.0, 1.0).unwrap(), 1000).unwrap();
        assert_eq!(sq.kappa_horizon, 1.0);
        assert!(sq.certified_global);
        assert_eq!(sq.kappa(), 1.0);

        let parity = kappa_of(&AttachmentSpec::parity_square(), 1000).unwrap();
        assert!((parity.kappa_horizon - 1.5).abs() < 1e-12);
        assert_eq!(parity.argmax, 3);
        assert!(parity.certified_global);
        assert!((1.5..=2.0).contains(&parity.kappa()));

        let c = kappa_of(&AttachmentSpec::constant(1.0).unwrap(), 1000).unwrap();
        assert!((c.kappa_horizon - 1001.0).abs() < 1e-9);
        assert!(!c.certified_global);
    }

    #[test]
    fn kappa_for_small_horizons_of_parity_table() {
        for horizon in 4..40 {
            let k = kappa_of(&AttachmentSpec::parity_square(), horizon).unwrap();
            assert!((1.5..=2.0).contains(&k.kappa_horizon));
        }
    }

    #[test]
    fn alpha_k_for_linear() {
        let w = alpha_k_search(&AttachmentSpec::linear(1.0, 1.0).unwrap(), 100_000).unwrap();
        assert!(w.alpha <= 3.0);
        assert!(w.eta_k >= w.alpha);
        assert!(w.k >= 1);
        assert!(w.ln_product_partial <= w.ln_product_bound);
    }

    #[test]
    fn alpha_k_needs_square_summability() {
        assert!(matches!(
            alpha_k_search(&AttachmentSpec::constant(1.0).unwrap(), 1000),
            Err(Error::NotFound(_))
        ));
    }
}
