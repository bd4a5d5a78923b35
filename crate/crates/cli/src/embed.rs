//! Two-sample comparison of the discrete tree and the CMJ jump chain.

use std::io::{self, Write};

use hubforge::cmj::{simulate_until_size, Caps};
use hubforge::numfmt::sig12;
use hubforge::pa_tree::grow;
use hubforge::replicate::{stream_seed, try_run_replicates};
use hubforge::stats::{chi_square_two_sample, ChiSquareTest};
use hubforge::{AttachmentSpec, Result};
use serde::Serialize;

pub const SIGNIFICANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramTest {
    pub name: &'static str,
    /// `None` when both histograms sit in a single cell.
    pub test: Option<ChiSquareTest>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedReport {
    pub nodes: usize,
    pub replicates: usize,
    pub tests: Vec<HistogramTest>,
    /// Every test performed has `p > SIGNIFICANCE`.
    pub pass: bool,
}

impl EmbedReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "test,statistic,dof,p_value,note")?;
        for t in &self.tests {
            match &t.test {
                Some(c) => writeln!(w, "{},{},{},{},{}", t.name, sig12(c.statistic), c.dof, sig12(c.p_value), t.note)?,
                None => writeln!(w, "{},,,,{}", t.name, t.note)?,
            }
        }
        Ok(())
    }
}

fn histogram(values: &[usize], cells: usize) -> Vec<u64> {
    let mut h = vec![0u64; cells];
    for &v in values {
        h[v] += 1;
    }
    h
}

fn compare(name: &'static str, a: &[usize], b: &[usize], cells: usize) -> HistogramTest {
    let (ha, hb) = (histogram(a, cells), histogram(b, cells));
    let occupied = (0..cells).filter(|&i| ha[i] + hb[i] > 0).count();
    if occupied <= 1 {
        return HistogramTest { name, test: None, note: "skipped: degenerate law on both sides".into() };
    }
    HistogramTest { name, test: Some(chi_square_two_sample(&ha, &hb)), note: String::new() }
}

/// Grows `replicates` trees of `nodes` nodes with each generator and compares
/// the root out-degree and leader birth-index histograms.
pub fn embed_check(spec: &AttachmentSpec, nodes: usize, replicates: usize, seed: u64) -> Result<EmbedReport> {
    let nodes = nodes.max(1);
    let discrete = try_run_replicates(stream_seed(seed, "embed-discrete"), replicates, |_, rng| {
        let tree = grow(spec, nodes - 1, rng, &mut [])?;
        Ok::<_, hubforge::Error>((tree.out_degree(0) as usize, tree.leader()))
    })?;
    let continuous = try_run_replicates(stream_seed(seed, "embed-cmj"), replicates, |_, rng| {
        let (pop, _) = simulate_until_size(spec, nodes, Caps::default(), rng)?;
        let degrees: Vec<u64> = pop.individuals().iter().map(|i| i.children).collect();
        let max = degrees.iter().copied().max().unwrap_or(0);
        let leader = degrees.iter().position(|&d| d == max).unwrap_or(0);
        Ok::<_, hubforge::Error>((degrees[0] as usize, leader))
    })?;
    let split = |v: &[(usize, usize)]| -> (Vec<usize>, Vec<usize>) { v.iter().copied().unzip() };
    let (root_a, leader_a) = split(&discrete);
    let (root_b, leader_b) = split(&continuous);
    let tests = vec![
        compare("root_out_degree", &root_a, &root_b, nodes),
        compare("leader_identity", &leader_a, &leader_b, nodes),
    ];
    let pass = tests.iter().all(|t| t.test.is_none_or(|c| c.p_value > SIGNIFICANCE));
    Ok(EmbedReport { nodes, replicates, tests, pass })
}
