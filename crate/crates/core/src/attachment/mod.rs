//! Attachment rules: the map from a node's out-degree to its attachment weight.
//!
//! Deterministic kinds give a fixed weight `f(k)`; [`AttachmentSpec::RandomFinite`]
//! gives an independent draw of `F(k)` from a finite-support law, i.i.d. across
//! nodes. Every expectation needed downstream is an exact enumeration over that
//! support.

mod expr;
mod parse;

pub use expr::Expr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a [`AttachmentSpec::Table`] does past its last entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailRule {
    RepeatLast,
    LinearExtrapolate,
    #[default]
    Error,
}

/// `coef * (k + 1)^exponent`, asserted to bound the weights for every `k >= from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBound {
    pub coef: f64,
    pub exponent: f64,
    pub from: u64,
}

impl PowerBound {
    pub fn new(coef: f64, exponent: f64, from: u64) -> Self {
        PowerBound { coef, exponent, from }
    }

    pub fn ln_at(&self, k: u64) -> f64 {
        self.coef.ln() + self.exponent * ((k + 1) as f64).ln()
    }
}

/// Power-law bounds on the weights, valid from some degree on. The lower bound
/// also bounds the almost-sure floor of random weights; the upper bound the
/// largest realisable value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Envelope {
    pub lower: Option<PowerBound>,
    pub upper: Option<PowerBound>,
}

/// A finite-support law on positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDist {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::InvalidArgument(
                "finite distribution needs matching, non-empty value and probability lists".into(),
            ));
        }
        if let Some(&v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!("support value {v} is not positive")));
        }
        if let Some(&p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidArgument(format!("probability {p} is negative")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(FiniteDist { values, probs })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        // u landed in the rounding slack above the cumulative total
        *self
            .values
            .iter()
            .zip(&self.probs)
            .rev()
            .find(|(_, p)| **p > 0.0)
            .map(|(v, _)| v)
            .unwrap_or(&self.values[self.values.len() - 1])
    }
}

/// An attachment rule.
#[derive(Debug, Clone, PartialEq)]
pub enum AttachmentSpec {
    /// `f(k) = c`
    Constant { c: f64 },
    /// `f(k) = a k + b`
    Linear { a: f64, b: f64 },
    /// `f(k) = c (k + 1)^p`
    Power { p: f64, c: f64 },
    /// `f(k) = values[k]`, continued by `tail`.
    Table { values: Vec<f64>, tail: TailRule },
    /// `f(k)` given by a formula in `k`, with optional declared envelope.
    Piecewise { expr: Expr, envelope: Envelope },
    /// `F(k) = (k + 1)^exponent * V_k`, with `V_k` drawn from
    /// `per_degree[min(k, len - 1)]`.
    RandomFinite { per_degree: Vec<FiniteDist>, exponent: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

impl AttachmentSpec {
    pub fn constant(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(AttachmentSpec::Constant { c })
    }

    pub fn linear(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidArgument(format!("slope a must be >= 0, got {a}")));
        }
        positive("b", b)?;
        Ok(AttachmentSpec::Linear { a, b })
    }

    pub fn power(p: f64, c: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::InvalidArgument(format!("exponent p must be finite, got {p}")));
        }
        positive("c", c)?;
        Ok(AttachmentSpec::Power { p, c })
    }

    pub fn table(values: Vec<f64>, tail: TailRule) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("table needs at least one value".into()));
        }
        for v in &values {
            positive("table value", *v)?;
        }
        if tail == TailRule::LinearExtrapolate && values.len() >= 2 {
            let n = values.len();
            if values[n - 1] < values[n - 2] {
                return Err(Error::InvalidArgument(
                    "linear extrapolation with a negative slope eventually produces non-positive weights"
                        .into(),
                ));
            }
        }
        Ok(AttachmentSpec::Table { values, tail })
    }

    pub fn piecewise(formula: &str, envelope: Envelope) -> Result<Self> {
        let expr = Expr::parse(formula).map_err(|reason| Error::Parse {
            input: formula.to_string(),
            reason,
        })?;
        for b in [envelope.lower, envelope.upper].into_iter().flatten() {
            positive("envelope coefficient", b.coef)?;
        }
        Ok(AttachmentSpec::Piecewise { expr, envelope })
    }

    pub fn random_finite(per_degree: Vec<FiniteDist>, exponent: f64) -> Result<Self> {
        if per_degree.is_empty() {
            return Err(Error::InvalidArgument("random spec needs at least one law".into()));
        }
        if !exponent.is_finite() {
            return Err(Error::InvalidArgument("exponent must be finite".into()));
        }
        Ok(AttachmentSpec::RandomFinite { per_degree, exponent })
    }

    /// `f(n) = (n+1)^2` when `n = 1` or `n` is even, `n^2 - 1` otherwise: a
    /// non-monotone rule whose ratio `f(n)/(n+1)` is still controlled.
    pub fn parity_square() -> Self {
        // (k^2 - 1)/(k + 1)^2 = (k - 1)/(k + 1) >= 7/8 for odd k >= 15
        AttachmentSpec::piecewise(
            "if(k == 1 || k % 2 == 0, (k+1)^2, k^2 - 1)",
            Envelope {
                lower: Some(PowerBound::new(0.875, 2.0, 15)),
                upper: Some(PowerBound::new(1.0, 2.0, 0)),
            },
        )
        .expect("built-in formula parses")
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, AttachmentSpec::RandomFinite { .. })
    }

    fn table_value(values: &[f64], tail: TailRule, k: u64) -> Result<f64> {
        let n = values.len() as u64;
        if k < n {
            return Ok(values[k as usize]);
        }
        match tail {
            TailRule::Error => Err(Error::TableExhausted { degree: k }),
            TailRule::RepeatLast => Ok(values[values.len() - 1]),
            TailRule::LinearExtrapolate => {
                if values.len() < 2 {
                    return Ok(values[0]);
                }
                let last = values[values.len() - 1];
                let slope = last - values[values.len() - 2];
                Ok(last + slope * (k - (n - 1)) as f64)
            }
        }
    }

    fn direct(&self, k: u64) -> Result<f64> {
        let v = match self {
            AttachmentSpec::Constant { c } => *c,
            AttachmentSpec::Linear { a, b } => a * k as f64 + b,
            AttachmentSpec::Power { p, c } => c * ((k + 1) as f64).powf(*p),
            AttachmentSpec::Table { values, tail } => Self::table_value(values, *tail, k)?,
            AttachmentSpec::Piecewise { expr, .. } => expr.eval(k),
            AttachmentSpec::RandomFinite { .. } => {
                return Err(Error::UnsupportedSpec(
                    "random weights have no single value; use the support".into(),
                ))
            }
        };
        if !(v > 0.0) || v.is_nan() {
            return Err(Error::NonPositiveWeight { degree: k, value: v });
        }
        Ok(v)
    }

    /// Natural log of the deterministic weight `f(k)`. Stays finite where
    /// `f(k)` itself would overflow.
    pub fn ln_weight(&self, k: u64) -> Result<f64> {
        if let AttachmentSpec::Power { p, c } = self {
            return Ok(c.ln() + p * ((k + 1) as f64).ln());
        }
        let v = self.direct(k)?;
        if v.is_infinite() {
            return Err(Error::NonPositiveWeight { degree: k, value: v });
        }
        Ok(v.ln())
    }

    /// Deterministic weight `f(k)`.
    pub fn weight(&self, k: u64) -> Result<f64> {
        let w = self.direct(k)?;
        if w.is_infinite() {
            return match self {
                AttachmentSpec::Power { .. } => Err(Error::UnsupportedSpec(format!(
                    "weight at degree {k} overflows f64; use ln_weight"
                ))),
                _ => Err(Error::NonPositiveWeight { degree: k, value: w }),
            };
        }
        Ok(w)
    }

    /// `f(k)` for deterministic kinds, an independent draw of `F(k)` for random ones.
    pub fn evaluate<R: Rng + ?Sized>(&self, k: u64, rng: Option<&mut R>) -> Result<f64> {
        match self {
            AttachmentSpec::RandomFinite { .. } => match rng {
                Some(rng) => self.sample_weight(k, rng),
                None => Err(Error::MissingRng),
            },
            _ => self.weight(k),
        }
    }

    /// Like [`evaluate`](Self::evaluate) with a source always at hand.
    pub fn sample_weight<R: Rng + ?Sized>(&self, k: u64, rng: &mut R) -> Result<f64> {
        match self {
            AttachmentSpec::RandomFinite { per_degree, exponent } => {
                let law = &per_degree[(k as usize).min(per_degree.len() - 1)];
                let w = law.sample(rng) * ((k + 1) as f64).powf(*exponent);
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::NonPositiveWeight { degree: k, value: w });
                }
                Ok(w)
            }
            _ => self.weight(k),
        }
    }

    /// Calls `visit(ln value, probability)` for each atom of the law of `F(k)`.
    pub fn for_each_atom(&self, k: u64, mut visit: impl FnMut(f64, f64)) -> Result<()> {
        match self {
            AttachmentSpec::RandomFinite { per_degree, exponent } => {
                let law = &per_degree[(k as usize).min(per_degree.len() - 1)];
                let shift = exponent * ((k + 1) as f64).ln();
                for (v, p) in law.values.iter().zip(&law.probs) {
                    if *p > 0.0 {
                        visit(v.ln() + shift, *p);
                    }
                }
            }
            _ => visit(self.ln_weight(k)?, 1.0),
        }
        Ok(())
    }

    /// The law of `F(k)` as `(ln value, probability)` pairs.
    pub fn ln_support(&self, k: u64) -> Result<Vec<(f64, f64)>> {
        let mut atoms = Vec::new();
        self.for_each_atom(k, |l, p| atoms.push((l, p)))?;
        Ok(atoms)
    }

    /// `ln x_k`, the almost-sure lower bound on `F(k)` (equal to `ln f(k)` for
    /// deterministic kinds).
    pub fn ln_floor(&self, k: u64) -> Result<f64> {
        let mut lo = f64::INFINITY;
        self.for_each_atom(k, |l, _| lo = lo.min(l))?;
        Ok(lo)
    }

    /// `ln` of the largest value `F(k)` can take.
    pub fn ln_ceiling(&self, k: u64) -> Result<f64> {
        let mut hi = f64::NEG_INFINITY;
        self.for_each_atom(k, |l, _| hi = hi.max(l))?;
        Ok(hi)
    }

    /// `E[F(k) / (F(k) + s)]`: the Laplace transform at `s` of a waiting time
    /// that is exponential with rate `F(k)`.
    pub fn laplace_factor(&self, k: u64, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
        }
        let ln_s = s.ln();
        let mut acc = 0.0;
        self.for_each_atom(k, |ln_f, p| acc += p / (1.0 + (ln_s - ln_f).exp()))?;
        Ok(acc)
    }

    /// `ln E[F(k) / (F(k) + s)]`, accurate when the factor is close to 1.
    pub fn ln_laplace_factor(&self, k: u64, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
        }
        let ln_s = s.ln();
        // 1 - E[s/(F+s)]
        let mut deficit = 0.0;
        self.for_each_atom(k, |ln_f, p| deficit += p / (1.0 + (ln_f - ln_s).exp()))?;
        Ok((-deficit).ln_1p())
    }

    /// `E[exp(lambda (X' - X))]` for independent waiting times `X, X'`, each
    /// exponential with an independent rate distributed as `F(k)`.
    pub fn symmetric_diff_moment(&self, k: u64, lambda: f64) -> Result<f64> {
        Ok(self.ln_symmetric_diff_moment(k, lambda)?.exp())
    }

    /// Natural log of [`symmetric_diff_moment`](Self::symmetric_diff_moment).
    pub fn ln_symmetric_diff_moment(&self, k: u64, lambda: f64) -> Result<f64> {
        let lambda = lambda.abs();
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let ln_lambda = lambda.ln();
        let (mut grow, mut shrink, mut cross) = (0.0, 0.0, 0.0);
        let mut blocking = None;
        self.for_each_atom(k, |ln_f, p| {
            if ln_lambda >= ln_f {
                blocking = Some(ln_f.exp());
                return;
            }
            let r = (ln_lambda - ln_f).exp();
            grow += p * r / (1.0 - r); // E[lambda / (F - lambda)]
            shrink += p * r / (1.0 + r); // E[lambda / (F + lambda)]
            cross += p * 2.0 * r * r / (1.0 - r * r); // E[2 lambda^2 / (F^2 - lambda^2)]
        })?;
        if let Some(weight) = blocking {
            return Err(Error::DivergentMoment { degree: k, lambda, weight });
        }
        // (1 + grow)(1 - shrink) - 1 = (grow - shrink) - grow * shrink
        Ok((cross - grow * shrink).ln_1p())
    }

    /// Analytic power-law bounds, derived for the built-in families and
    /// declared for formulas.
    pub fn envelope(&self) -> Envelope {
        let both = |coef: f64, exponent: f64, from: u64| Envelope {
            lower: Some(PowerBound::new(coef, exponent, from)),
            upper: Some(PowerBound::new(coef, exponent, from)),
        };
        match self {
            AttachmentSpec::Constant { c } => both(*c, 0.0, 0),
            AttachmentSpec::Power { p, c } => both(*c, *p, 0),
            AttachmentSpec::Linear { a, b } => {
                if *a == 0.0 {
                    both(*b, 0.0, 0)
                } else {
                    // f(k)/(k+1) = a + (b - a)/(k + 1) moves monotonically from b to a
                    Envelope {
                        lower: Some(PowerBound::new(a.min(*b), 1.0, 0)),
                        upper: Some(PowerBound::new(a.max(*b), 1.0, 0)),
                    }
                }
            }
            AttachmentSpec::Table { values, tail } => {
                let n = values.len();
                let last = values[n - 1];
                let from = (n - 1) as u64;
                match tail {
                    TailRule::Error => Envelope::default(),
                    TailRule::RepeatLast => both(last, 0.0, from),
                    TailRule::LinearExtrapolate => {
                        let slope = if n >= 2 { last - values[n - 2] } else { 0.0 };
                        if slope <= 0.0 {
                            both(last, 0.0, from)
                        } else {
                            let start = last / n as f64;
                            Envelope {
                                lower: Some(PowerBound::new(start.min(slope), 1.0, from)),
                                upper: Some(PowerBound::new(start.max(slope), 1.0, from)),
                            }
                        }
                    }
                }
            }
            AttachmentSpec::Piecewise { envelope, .. } => *envelope,
            AttachmentSpec::RandomFinite { per_degree, exponent } => {
                let law = &per_degree[per_degree.len() - 1];
                let from = (per_degree.len() - 1) as u64;
                Envelope {
                    lower: Some(PowerBound::new(law.min(), *exponent, from)),
                    upper: Some(PowerBound::new(law.max(), *exponent, from)),
                }
            }
        }
    }

    /// The power-law minorant of the floor sequence `x_k`, if known.
    pub fn lower_envelope(&self) -> Option<PowerBound> {
        self.envelope().lower
    }

    /// Checks a declared envelope against the actual weights for every degree
    /// in `from..=horizon`.
    pub fn check_envelope(&self, horizon: u64) -> Result<()> {
        const SLACK: f64 = 1e-12;
        let env = self.envelope();
        if let Some(lo) = env.lower {
            for k in lo.from..=horizon.max(lo.from) {
                let floor = self.ln_floor(k)?;
                if lo.ln_at(k) > floor + SLACK * floor.abs().max(1.0) {
                    return Err(Error::EnvelopeViolated {
                        degree: k,
                        detail: format!("lower bound {} exceeds weight {}", lo.ln_at(k).exp(), floor.exp()),
                    });
                }
            }
        }
        if let Some(hi) = env.upper {
            for k in hi.from..=horizon.max(hi.from) {
                let ceil = self.ln_ceiling(k)?;
                if hi.ln_at(k) < ceil - SLACK * ceil.abs().max(1.0) {
                    return Err(Error::EnvelopeViolated {
                        degree: k,
                        detail: format!("upper bound {} below weight {}", hi.ln_at(k).exp(), ceil.exp()),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicate::replicate_rng;

    fn two_point() -> AttachmentSpec {
        AttachmentSpec::random_finite(
            vec![FiniteDist::new(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap()],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let none: Option<&mut crate::replicate::SimRng> = None;
        assert_eq!(AttachmentSpec::linear(1.0, 1.0).unwrap().evaluate(0, none).unwrap(), 1.0);
        assert_eq!(AttachmentSpec::power(2.0, 1.0).unwrap().weight(3).unwrap(), 16.0);
        assert_eq!(AttachmentSpec::parity_square().weight(3).unwrap(), 8.0);
        let parity: Vec<f64> =
            (0..7).map(|k| AttachmentSpec::parity_square().weight(k).unwrap()).collect();
        assert_eq!(parity, vec![1.0, 4.0, 9.0, 8.0, 25.0, 24.0, 49.0]);
    }

    #[test]
    fn random_requires_rng() {
        let none: Option<&mut crate::replicate::SimRng> = None;
        assert_eq!(two_point().evaluate(0, none), Err(Error::MissingRng));
        let mut rng = replicate_rng(1, 0);
        let w = two_point().evaluate(4, Some(&mut rng)).unwrap();
        assert!(w == 1.0 || w == 3.0);
    }

    #[test]
    fn non_positive_expression_is_rejected() {
        let spec = AttachmentSpec::piecewise("2 - k", Envelope::default()).unwrap();
        assert_eq!(spec.weight(1).unwrap(), 1.0);
        assert!(matches!(spec.weight(2), Err(Error::NonPositiveWeight { degree: 2, .. })));
    }

    #[test]
    fn table_tail_rules() {
        let t = |tail| AttachmentSpec::table(vec![1.0, 2.0, 4.0], tail).unwrap();
        assert_eq!(t(TailRule::RepeatLast).weight(10).unwrap(), 4.0);
        assert_eq!(t(TailRule::LinearExtrapolate).weight(5).unwrap(), 10.0);
        assert_eq!(t(TailRule::Error).weight(3), Err(Error::TableExhausted { degree: 3 }));
        assert!(AttachmentSpec::table(vec![3.0, 1.0], TailRule::LinearExtrapolate).is_err());
        assert!(AttachmentSpec::table(vec![], TailRule::Error).is_err());
    }

    #[test]
    fn laplace_factor_examples() {
        let c1 = AttachmentSpec::constant(1.0).unwrap();
        assert_eq!(c1.laplace_factor(5, 1.0).unwrap(), 0.5);
        let lin = AttachmentSpec::linear(1.0, 1.0).unwrap();
        assert_eq!(lin.laplace_factor(2, 3.0).unwrap(), 0.5);
        // 0.5 * 1/2 + 0.5 * 3/4
        assert!((two_point().laplace_factor(7, 1.0).unwrap() - 0.625).abs() < 1e-15);
        assert!(c1.laplace_factor(0, 0.0).is_err());
    }

    #[test]
    fn symmetric_diff_moment_examples() {
        let f2 = AttachmentSpec::constant(2.0).unwrap();
        assert!((f2.symmetric_diff_moment(0, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let f3 = AttachmentSpec::constant(3.0).unwrap();
        assert!((f3.symmetric_diff_moment(9, 1.0).unwrap() - 1.125).abs() < 1e-15);
        let lin = AttachmentSpec::linear(1.0, 1.0).unwrap();
        assert_eq!(lin.symmetric_diff_moment(4, 0.0).unwrap(), 1.0);
        assert!(lin.symmetric_diff_moment(4, 1e-9).unwrap() >= 1.0);
        assert!(matches!(
            f2.symmetric_diff_moment(0, 2.0),
            Err(Error::DivergentMoment { .. })
        ));
        assert!(matches!(
            two_point().symmetric_diff_moment(0, 1.5),
            Err(Error::DivergentMoment { .. })
        ));
    }

    #[test]
    fn huge_weights_stay_finite_in_log_space() {
        let spec = AttachmentSpec::power(100.0, 1.0).unwrap();
        let ln = spec.ln_weight(1_000_000).unwrap();
        assert!(ln.is_finite() && ln > 1000.0);
        let factor = spec.laplace_factor(1_000_000, 1.0).unwrap();
        assert_eq!(factor, 1.0);
        let near = AttachmentSpec::power(50.0, 1.0).unwrap();
        let ln = near.ln_laplace_factor(1_000_000, 1.0).unwrap();
        assert!(ln < 0.0 && ln > -1e-290);
        assert!(spec.weight(1_000_000).is_err());
    }

    #[test]
    fn derived_envelopes_hold() {
        let specs = [
            AttachmentSpec::constant(2.0).unwrap(),
            AttachmentSpec::linear(1.0, 3.0).unwrap(),
            AttachmentSpec::linear(2.0, 1.0).unwrap(),
            AttachmentSpec::power(0.5, 2.0).unwrap(),
            AttachmentSpec::table(vec![1.0, 2.0, 5.0], TailRule::LinearExtrapolate).unwrap(),
            AttachmentSpec::table(vec![1.0, 2.0, 5.0], TailRule::RepeatLast).unwrap(),
            AttachmentSpec::parity_square(),
            two_point(),
        ];
        for spec in &specs {
            spec.check_envelope(2000).unwrap();
        }
    }

    #[test]
    fn false_envelope_is_caught() {
        let spec = AttachmentSpec::piecewise(
            "k + 1",
            Envelope { lower: Some(PowerBound::new(1.0, 1.5, 0)), upper: None },
        )
        .unwrap();
        assert!(matches!(spec.check_envelope(100), Err(Error::EnvelopeViolated { degree: 1, .. })));
    }
}
