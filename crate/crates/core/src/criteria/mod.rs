//! Numeric persistence criteria and the classifier built on them.
//!
//! Every sum is reported with a `certified` flag that is set only when an
//! analytic tail argument backs it; truncation alone never certifies.

mod gamma;
mod kolmogorov;
mod series;
mod superlinear;

use serde::Serialize;

pub use gamma::{gamma_ratio_bound, zeta, GammaReport, GammaRow};
pub use kolmogorov::{three_series_check, three_series_term, ThreeSeriesReport, ThreeSeriesTerm};
pub use series::{
    find_lambda, inverse_square_sum, malthus_sum, symmetric_moment_product, LambdaTarget,
    LambdaWitness, MomentProduct,
};
pub use superlinear::{alpha_k, alpha_k_search, kappa_of, AlphaK, KappaReport};

use crate::attachment::AttachmentSpec;

pub const DEFAULT_TRUNCATION: u64 = 100_000;
/// Log-scale bisection range for `lambda` and `alpha`.
pub const DEFAULT_RANGE: (f64, f64) = (1e-6, 1e6);

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub partial: f64,
    /// Bound on the remainder past `truncation`; infinite unless converging.
    pub tail_bound: f64,
    pub verdict: SeriesVerdict,
    pub certified: bool,
    pub truncation: u64,
    pub note: String,
}

impl SeriesReport {
    pub fn converges(partial: f64, tail_bound: f64, truncation: u64, note: String) -> Self {
        SeriesReport { partial, tail_bound, verdict: SeriesVerdict::Converges, certified: true, truncation, note }
    }

    pub fn diverges(partial: f64, truncation: u64, note: String) -> Self {
        SeriesReport {
            partial,
            tail_bound: f64::INFINITY,
            verdict: SeriesVerdict::Diverges,
            certified: true,
            truncation,
            note,
        }
    }

    pub fn unknown(partial: f64, truncation: u64, note: String) -> Self {
        SeriesReport {
            partial,
            tail_bound: f64::INFINITY,
            verdict: SeriesVerdict::Unknown,
            certified: false,
            truncation,
            note,
        }
    }

    /// `partial + tail_bound`.
    pub fn upper(&self) -> f64 {
        self.partial + self.tail_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    NoPersistentHub,
    UniquePersistentHub,
    PersistentHub,
    Inconclusive,
}

/// The argument behind a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremRoute {
    /// `sum 1/F(j)^2` diverges, so no hub persists.
    SquareSumDivergence,
    /// `sum 1/F(j)^2` converges and the Laplace series is finite at some `lambda`.
    SquareSummableLaplace,
    /// Deterministic `f` with a uniform `kappa` bound on `f(i)/(i+1)`.
    ControlledSuperlinear,
    /// `(alpha, K)` control the Laplace series and the moment product.
    LaplaceMomentProduct,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Witnesses {
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<u64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub name: String,
    pub partial: Option<f64>,
    pub tail_bound: Option<f64>,
    pub certified: bool,
    pub note: String,
}

impl Evidence {
    fn series(name: &str, r: &SeriesReport) -> Self {
        Evidence {
            name: name.into(),
            partial: Some(r.partial),
            tail_bound: r.tail_bound.is_finite().then_some(r.tail_bound),
            certified: r.certified,
            note: format!("{:?}: {}", r.verdict, r.note).to_lowercase(),
        }
    }

    fn note(name: &str, note: String) -> Self {
        Evidence { name: name.into(), partial: None, tail_bound: None, certified: false, note }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub verdict: Verdict,
    pub theorem: Option<TheoremRoute>,
    pub witnesses: Witnesses,
    pub evidence: Vec<Evidence>,
}

impl CriterionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub truncation: u64,
    pub kappa_horizon: u64,
    pub range: (f64, f64),
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { truncation: DEFAULT_TRUNCATION, kappa_horizon: 10_000, range: DEFAULT_RANGE }
    }
}

/// Runs the decision cascade:
/// 1. certified divergence of `sum 1/F(j)^2`: no persistent hub;
/// 2. certified convergence of that sum and a finite Laplace series: unique hub;
/// 3. a certified global `kappa`: unique hub;
/// 4. `(alpha, K)` alone: a persistent hub, uniqueness undecided;
/// 5. otherwise inconclusive.
///
/// Numeric failures along the way are recorded as evidence, never raised.
pub fn classify(spec: &AttachmentSpec, options: &ClassifyOptions) -> CriterionReport {
    let mut evidence = Vec::new();
    let mut witnesses = Witnesses::default();
    let done = |verdict, theorem, witnesses, evidence| CriterionReport {
        verdict,
        theorem: Some(theorem),
        witnesses,
        evidence,
    };

    let squares = match inverse_square_sum(spec, options.truncation) {
        Ok(r) => {
            evidence.push(Evidence::series("inverse-square-sum", &r));
            Some(r)
        }
        Err(e) => {
            evidence.push(Evidence::note("inverse-square-sum", e.to_string()));
            None
        }
    };
    let square_summable = match &squares {
        Some(r) if r.certified && r.verdict == SeriesVerdict::Diverges => {
            return done(Verdict::NoPersistentHub, TheoremRoute::SquareSumDivergence, witnesses, evidence);
        }
        Some(r) => r.certified && r.verdict == SeriesVerdict::Converges,
        None => false,
    };

    if square_summable {
        match find_lambda(spec, LambdaTarget::Finite, options.range, options.truncation) {
            Ok(w) => {
                evidence.push(Evidence::series("laplace-series", &w.report));
                witnesses.lambda = Some(w.lambda);
                push_alpha_k(spec, options, &mut witnesses, &mut evidence);
                push_gamma(spec, w.lambda, &mut evidence);
                evidence.push(Evidence::note(
                    "exceedance-sum",
                    "sum P(X_j > eps) is finite by the square-sum certificate".into(),
                ));
                return done(Verdict::UniquePersistentHub, TheoremRoute::SquareSummableLaplace, witnesses, evidence);
            }
            Err(e) => evidence.push(Evidence::note("laplace-series", e.to_string())),
        }
    }

    if spec.is_deterministic() {
        match kappa_of(spec, options.kappa_horizon) {
            Ok(k) => {
                evidence.push(Evidence {
                    name: "kappa".into(),
                    partial: Some(k.kappa_horizon),
                    tail_bound: None,
                    certified: k.certified_global,
                    note: format!("horizon {} attained at degree {}", k.horizon, k.argmax),
                });
                if let Some(kappa) = k.kappa_global {
                    witnesses.kappa = Some(kappa);
                    return done(Verdict::UniquePersistentHub, TheoremRoute::ControlledSuperlinear, witnesses, evidence);
                }
            }
            Err(e) => evidence.push(Evidence::note("kappa", e.to_string())),
        }
    }

    if square_summable && push_alpha_k(spec, options, &mut witnesses, &mut evidence) {
        return done(Verdict::PersistentHub, TheoremRoute::LaplaceMomentProduct, witnesses, evidence);
    }

    CriterionReport { verdict: Verdict::Inconclusive, theorem: None, witnesses, evidence }
}

fn push_alpha_k(
    spec: &AttachmentSpec,
    options: &ClassifyOptions,
    witnesses: &mut Witnesses,
    evidence: &mut Vec<Evidence>,
) -> bool {
    match alpha_k_search(spec, options.truncation) {
        Ok(w) => {
            witnesses.alpha = Some(w.alpha);
            witnesses.k = Some(w.k);
            evidence.push(Evidence {
                name: "moment-product".into(),
                partial: Some(w.ln_product_partial),
                tail_bound: Some(w.ln_product_bound),
                certified: true,
                note: format!("eta_K = {} >= alpha", w.eta_k),
            });
            true
        }
        Err(e) => {
            evidence.push(Evidence::note("alpha-k", e.to_string()));
            false
        }
    }
}

/// Gamma-ratio domination for rules bounded by `C0 (j+1)`.
fn push_gamma(spec: &AttachmentSpec, lambda: f64, evidence: &mut Vec<Evidence>) {
    let Some(hi) = spec.envelope().upper.filter(|b| b.exponent <= 1.0 && b.from == 0) else {
        return;
    };
    let c0 = hi.coef;
    let lambda = lambda.max(2.5 * c0);
    if let Ok(g) = gamma_ratio_bound(c0, lambda, 1000) {
        evidence.push(Evidence {
            name: "gamma-ratio".into(),
            partial: Some(g.partial_sum),
            tail_bound: g.tail.is_finite().then_some(g.tail),
            certified: g.finite,
            note: format!("C0 = {c0}, C1 = {}, lambda = {lambda}", g.c1_certified),
        });
    }
}
