//! Truncated series with analytic tail certificates.

use serde::Serialize;

use super::{CompensatedSum, SeriesReport, SeriesVerdict};
use crate::attachment::AttachmentSpec;
use crate::error::{Error, Result};
use crate::numfmt::sig12;

/// Envelopes usable beyond the truncation point `n`: their validity must start
/// at or before `n + 1`.
fn tail_envelopes(spec: &AttachmentSpec, n: u64) -> (Option<crate::PowerBound>, Option<crate::PowerBound>) {
    let env = spec.envelope();
    let usable = |b: Option<crate::PowerBound>| b.filter(|b| b.from <= n + 1);
    // declared envelopes are only trusted once they check out up to the truncation
    if matches!(spec, AttachmentSpec::Piecewise { .. }) && spec.check_envelope(n).is_err() {
        return (None, None);
    }
    (usable(env.lower), usable(env.upper))
}

/// `sum_{j <= n} 1 / x_j^2` with `x_j` the almost-sure floor of `F(j)`
/// (`f(j)` itself for deterministic specs).
///
/// Convergence is certified by a lower envelope `c (j+1)^p` with `p > 1/2`,
/// through `sum_{j > n} (j+1)^{-2p} <= (n+1)^{1-2p} / (2p - 1)`. Divergence is
/// certified by an upper envelope with `p <= 1/2`, which bounds every
/// realisable `F(j)`.
pub fn inverse_square_sum(spec: &AttachmentSpec, n: u64) -> Result<SeriesReport> {
    let mut sum = CompensatedSum::default();
    for j in 0..=n {
        sum.add((-2.0 * spec.ln_floor(j)?).exp());
    }
    let partial = sum.value();
    let (lower, upper) = tail_envelopes(spec, n);
    if let Some(lo) = lower.filter(|b| b.exponent > 0.5) {
        let p = lo.exponent;
        let tail = ((1.0 - 2.0 * p) * ((n + 1) as f64).ln()).exp() / (lo.coef * lo.coef * (2.0 * p - 1.0));
        return Ok(SeriesReport::converges(partial, tail, n, format!(
            "lower envelope {} (j+1)^{p} from degree {}", sig12(lo.coef), lo.from
        )));
    }
    if let Some(hi) = upper.filter(|b| b.exponent <= 0.5) {
        return Ok(SeriesReport::diverges(partial, n, format!(
            "upper envelope {}(j+1)^{} from degree {}: terms are not summable",
            hi.coef, hi.exponent, hi.from
        )));
    }
    Ok(SeriesReport::unknown(partial, n, "no envelope decides the tail".into()))
}

/// Upper bounds on `sum_{i >= k} 1/x_i^2` for `k = 0..=n+1`, each combining
/// the exact suffix up to `n` with the envelope tail. `None` without a
/// convergence certificate.
pub(crate) fn inverse_square_suffix_bounds(spec: &AttachmentSpec, n: u64) -> Result<Option<Vec<f64>>> {
    let report = inverse_square_sum(spec, n)?;
    if !(report.certified && report.verdict == SeriesVerdict::Converges) {
        return Ok(None);
    }
    let mut suffix = vec![0.0; n as usize + 2];
    suffix[n as usize + 1] = report.tail_bound;
    for j in (0..=n).rev() {
        suffix[j as usize] = suffix[j as usize + 1] + (-2.0 * spec.ln_floor(j)?).exp();
    }
    Ok(Some(suffix))
}

/// `sum_{i=0}^{n} prod_{j<=i} E[F(j) / (F(j) + lambda)]`, accumulated in log
/// space.
///
/// Tail certificates past the last summed index `m`:
/// - bounded upper envelope `U`: factors are at most `q = U/(U + lambda)`, so
///   the tail is at most `t_m q / (1 - q)`;
/// - upper envelope `C (j+1)^e` with `e <= 1` and `beta = lambda / C > 1`:
///   factors are at most `(j+1)/(j+1+beta)`, whose tail products sum to
///   `t_m (m + 2) / (beta - 1)` exactly;
/// - lower envelope with exponent above 1: factors tend to 1 fast enough that
///   the terms stay bounded away from 0, so the series diverges.
pub fn malthus_sum(spec: &AttachmentSpec, lambda: f64, n: u64) -> Result<SeriesReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    const NEGLIGIBLE: f64 = -700.0;
    let mut sum = CompensatedSum::default();
    let mut ln_term = 0.0;
    let mut last = 0;
    for i in 0..=n {
        ln_term += spec.ln_laplace_factor(i, lambda)?;
        sum.add(ln_term.exp());
        last = i;
        if ln_term < NEGLIGIBLE {
            break;
        }
    }
    let partial = sum.value();
    let t_last = ln_term.exp();
    let (lower, upper) = tail_envelopes(spec, last);

    let mut best: Option<(f64, String)> = None;
    let mut offer = |tail: f64, note: String| {
        if best.as_ref().is_none_or(|(b, _)| tail < *b) {
            best = Some((tail, note));
        }
    };
    if let Some(hi) = upper {
        let next = (last + 2) as f64;
        if hi.exponent <= 0.0 {
            let u = hi.coef * next.powf(hi.exponent);
            let q = u / (u + lambda);
            offer(t_last * q / (1.0 - q), format!("factors beyond {last} are at most {q}"));
        }
        if hi.exponent <= 1.0 {
            let beta = lambda / hi.coef;
            if beta > 1.0 {
                offer(
                    t_last * next / (beta - 1.0),
                    format!("factors beyond {last} are at most (j+1)/(j+1+{beta})"),
                );
            }
        }
    }
    if let Some((tail, note)) = best {
        return Ok(SeriesReport::converges(partial, tail, last, note));
    }
    if let Some(lo) = lower.filter(|b| b.exponent > 1.0) {
        return Ok(SeriesReport::diverges(partial, last, format!(
            "lower envelope exponent {} > 1 keeps the terms away from 0",
            lo.exponent
        )));
    }
    Ok(SeriesReport::unknown(partial, last, "no envelope decides the tail".into()))
}

/// What [`find_lambda`] asks of the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaTarget {
    /// certified value (with tail) strictly below 1
    BelowOne,
    /// certified convergence
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaWitness {
    pub lambda: f64,
    pub target: LambdaTarget,
    pub report: SeriesReport,
}

fn meets(report: &SeriesReport, target: LambdaTarget) -> bool {
    report.certified
        && report.verdict == SeriesVerdict::Converges
        && match target {
            LambdaTarget::Finite => true,
            LambdaTarget::BelowOne => report.partial + report.tail_bound < 1.0,
        }
}

/// Smallest `lambda` on a 60-step log-scale bisection of `range` whose series
/// meets `target`. Relies on the series decreasing in `lambda`; the returned
/// point always carries its own certificate.
pub fn find_lambda(
    spec: &AttachmentSpec,
    target: LambdaTarget,
    range: (f64, f64),
    n: u64,
) -> Result<LambdaWitness> {
    let (mut lo, mut hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad search range [{lo}, {hi}]")));
    }
    let check = |lambda: f64| -> Result<(bool, SeriesReport)> {
        let r = malthus_sum(spec, lambda, n)?;
        Ok((meets(&r, target), r))
    };
    let (ok_lo, report_lo) = check(lo)?;
    if ok_lo {
        return Ok(LambdaWitness { lambda: lo, target, report: report_lo });
    }
    let (ok_hi, mut report_hi) = check(hi)?;
    if !ok_hi {
        return Err(Error::NotFound(format!(
            "no lambda in [{lo}, {hi}] gives a certified {} series",
            match target {
                LambdaTarget::BelowOne => "sub-unit",
                LambdaTarget::Finite => "finite",
            }
        )));
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        let (ok, report) = check(mid)?;
        if ok {
            hi = mid;
            report_hi = report;
        } else {
            lo = mid;
        }
    }
    Ok(LambdaWitness { lambda: hi, target, report: report_hi })
}

/// `ln prod_{j >= from} E[exp(lambda (X'_{j+1} - X_{j+1}))]`, where the rates are
/// distributed as `F(j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentProduct {
    pub ln_partial: f64,
    pub ln_tail_bound: f64,
    pub certified: bool,
}

impl MomentProduct {
    pub fn ln_upper(&self) -> f64 {
        self.ln_partial + self.ln_tail_bound
    }
}

/// Partial product over degrees `from..=n` with a tail bound for degrees past
/// `n`: with `u_j = lambda^2 / x_j^2 <= u = lambda^2 / x_{n+1}^2 <= 1/2`, each
/// factor is `1 / (1 - u_j) <= exp(u_j / (1 - u))`.
pub fn symmetric_moment_product(
    spec: &AttachmentSpec,
    from: u64,
    lambda: f64,
    n: u64,
) -> Result<MomentProduct> {
    let n = n.max(from);
    let mut sum = CompensatedSum::default();
    for j in from..=n {
        sum.add(spec.ln_symmetric_diff_moment(j, lambda)?);
    }
    let ln_partial = sum.value();
    let report = inverse_square_sum(spec, n)?;
    let lower = tail_envelopes(spec, n).0;
    let clear = lower.is_some_and(|lo| {
        lo.exponent >= 0.0 && lo.ln_at(n + 1) >= (2.0f64.sqrt() * lambda.abs()).ln()
    });
    if let (true, SeriesVerdict::Converges, true, Some(lo)) = (report.certified, report.verdict, clear, lower) {
        let u = (2.0 * (lambda.abs().ln() - lo.ln_at(n + 1))).exp();
        return Ok(MomentProduct {
            ln_partial,
            ln_tail_bound: lambda * lambda * report.tail_bound / (1.0 - u),
            certified: true,
        });
    }
    if report.certified && report.verdict == SeriesVerdict::Diverges && lambda != 0.0 {
        return Err(Error::DivergentMoment {
            degree: n,
            lambda,
            weight: spec.ln_ceiling(n)?.exp(),
        });
    }
    Ok(MomentProduct { ln_partial, ln_tail_bound: f64::INFINITY, certified: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin() -> AttachmentSpec {
        AttachmentSpec::linear(1.0, 1.0).unwrap()
    }

    #[test]
    fn telescoping_malthus_value() {
        let r = malthus_sum(&lin(), 3.0, 100_000).unwrap();
        assert!(r.certified);
        assert!(r.partial <= 0.5 + 1e-15);
        assert!((r.partial + r.tail_bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn geometric_malthus_value() {
        // sum_{i>=0} (1/(1+lambda))^{i+1} = 1/lambda
        let c = AttachmentSpec::constant(1.0).unwrap();
        for lambda in [0.5, 1.0, 2.0, 10.0] {
            let r = malthus_sum(&c, lambda, 10_000).unwrap();
            assert!(r.certified);
            assert!((r.partial + r.tail_bound - 1.0 / lambda).abs() < 1e-9, "{lambda}");
        }
    }

    #[test]
    fn malthus_decreases_in_lambda() {
        let spec = AttachmentSpec::power(0.5, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let v = malthus_sum(&spec, 0.25 * i as f64, 2000).unwrap().partial;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn superlinear_malthus_diverges() {
        let r = malthus_sum(&AttachmentSpec::power(2.0, 1.0).unwrap(), 5.0, 1000).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Diverges);
        assert!(r.certified);
    }

    #[test]
    fn inverse_square_examples() {
        let r = inverse_square_sum(&AttachmentSpec::constant(1.0).unwrap(), 100).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Diverges);
        let r = inverse_square_sum(&AttachmentSpec::power(2.0, 1.0).unwrap(), 100).unwrap();
        assert_eq!((r.verdict, r.certified), (SeriesVerdict::Converges, true));
        let r = inverse_square_sum(&AttachmentSpec::power(0.5, 1.0).unwrap(), 100).unwrap();
        assert_eq!((r.verdict, r.certified), (SeriesVerdict::Diverges, true));
        let unknown = AttachmentSpec::piecewise("k + 1", Default::default()).unwrap();
        let r = inverse_square_sum(&unknown, 100).unwrap();
        assert_eq!((r.verdict, r.certified), (SeriesVerdict::Unknown, false));
    }

    #[test]
    fn find_lambda_examples() {
        let w = find_lambda(&lin(), LambdaTarget::BelowOne, (1e-6, 1e6), 100_000).unwrap();
        assert!(w.lambda <= 3.0 && (w.lambda - 2.0).abs() < 1e-3, "{}", w.lambda);
        let c = AttachmentSpec::constant(1.0).unwrap();
        let w = find_lambda(&c, LambdaTarget::Finite, (1e-6, 1e6), 10_000).unwrap();
        assert_eq!(w.lambda, 1e-6);
        let w = find_lambda(&c, LambdaTarget::BelowOne, (1e-6, 1e6), 10_000).unwrap();
        assert!(w.lambda > 1.0 && w.lambda < 1.0 + 1e-6, "{}", w.lambda);
        let sq = AttachmentSpec::power(2.0, 1.0).unwrap();
        assert!(matches!(
            find_lambda(&sq, LambdaTarget::Finite, (1e-6, 1e6), 1000),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn overtake_moment_product_telescopes() {
        // prod_{m >= 3} m^2/(m^2 - 1) = 3/2
        let p = symmetric_moment_product(&lin(), 2, 1.0, 100_000).unwrap();
        assert!(p.certified);
        assert!(p.ln_partial <= 1.5f64.ln());
        assert!(p.ln_upper() >= 1.5f64.ln() - 1e-12);
        assert!(p.ln_upper() - 1.5f64.ln() < 1e-4);
        let c = AttachmentSpec::constant(3.0).unwrap();
        assert!(matches!(
            symmetric_moment_product(&c, 0, 1.0, 100),
            Err(Error::DivergentMoment { .. })
        ));
    }
}
