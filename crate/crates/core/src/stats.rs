//! Small statistics toolkit for the Monte Carlo checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn upper_tail(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("dof is positive");
    dist.sf(statistic)
}

/// Groups consecutive bins until each group's `size` reaches `min`; a short
/// remainder joins the last group.
fn merge_groups(sizes: &[f64], min: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, s) in sizes.iter().enumerate() {
        acc += s;
        if acc >= min {
            groups.push(start..i + 1);
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < sizes.len() {
        match groups.last_mut() {
            Some(last) => last.end = sizes.len(),
            None => groups.push(0..sizes.len()),
        }
    }
    groups
}

/// Pearson goodness-of-fit of `observed` counts against cell probabilities.
/// Adjacent cells are pooled until every expected count is at least 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len(), "one probability per cell");
    let n: u64 = observed.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let groups = merge_groups(&expected, 5.0);
    let statistic = groups
        .iter()
        .map(|g| {
            let o: u64 = observed[g.clone()].iter().sum();
            let e: f64 = expected[g.clone()].iter().sum();
            if e > 0.0 {
                (o as f64 - e).powi(2) / e
            } else {
                0.0
            }
        })
        .sum();
    let dof = groups.len().saturating_sub(1);
    ChiSquareTest { statistic, dof, p_value: upper_tail(statistic, dof) }
}

/// Chi-square test that two count vectors over the same cells share one law.
/// Adjacent cells are pooled until each pooled cell holds at least 10 counts
/// in total.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareTest {
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    let na: f64 = a.iter().sum::<u64>() as f64;
    let nb: f64 = b.iter().sum::<u64>() as f64;
    let totals: Vec<f64> = (0..len).map(|i| get(a, i) + get(b, i)).collect();
    let groups = merge_groups(&totals, 10.0);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for g in &groups {
        let sa: f64 = g.clone().map(|i| get(a, i)).sum();
        let sb: f64 = g.clone().map(|i| get(b, i)).sum();
        if sa + sb > 0.0 {
            statistic += (ka * sa - kb * sb).powi(2) / (sa + sb);
            cells += 1;
        }
    }
    let dof = cells.saturating_sub(1);
    ChiSquareTest { statistic, dof, p_value: upper_tail(statistic, dof) }
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
