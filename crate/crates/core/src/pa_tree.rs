//! Discrete preferential attachment growth.
//!
//! Starting from the single node `0`, each step samples an existing node with
//! probability proportional to its current weight and attaches a new node to
//! it. Nodes are identified by birth index. For random specs the parent's
//! weight at its new degree and the newborn's weight at degree 0 are drawn
//! once, right after the attachment, and cached.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::Rng;
use serde::Serialize;

use crate::attachment::AttachmentSpec;
use crate::error::{Error, Result};
use crate::weighted_index::WeightedIndex;

const NO_PARENT: usize = usize::MAX;
const REBUILD_EVERY: u64 = 1 << 20;

/// A rooted tree whose node `i` was born at step `i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthTree {
    parent: Vec<usize>,
    out_degree: Vec<u64>,
    weight: Vec<f64>,
}

impl GrowthTree {
    /// The single root node with its weight at degree 0.
    pub fn root(weight: f64) -> Self {
        GrowthTree { parent: vec![NO_PARENT], out_degree: vec![0], weight: vec![weight] }
    }

    /// Builds a tree from `parents[i - 1]`, the parent of node `i`, weighting
    /// nodes by a deterministic spec.
    pub fn from_parents(parents: &[usize], spec: &AttachmentSpec) -> Result<Self> {
        if !spec.is_deterministic() {
            return Err(Error::UnsupportedSpec("from_parents needs a deterministic spec".into()));
        }
        let n = parents.len() + 1;
        let mut parent = Vec::with_capacity(n);
        parent.push(NO_PARENT);
        let mut out_degree = vec![0u64; n];
        for (i, &p) in parents.iter().enumerate() {
            if p > i {
                return Err(Error::InvalidArgument(format!(
                    "node {} cannot attach to later node {p}",
                    i + 1
                )));
            }
            parent.push(p);
            out_degree[p] += 1;
        }
        let weight = out_degree.iter().map(|&d| spec.weight(d)).collect::<Result<_>>()?;
        Ok(GrowthTree { parent, out_degree, weight })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        match self.parent[node] {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    pub fn out_degree(&self, node: usize) -> u64 {
        self.out_degree[node]
    }

    pub fn out_degrees(&self) -> &[u64] {
        &self.out_degree
    }

    pub fn current_weight(&self, node: usize) -> f64 {
        self.weight[node]
    }

    pub fn birth_index(&self, node: usize) -> usize {
        node
    }

    pub fn max_degree(&self) -> u64 {
        self.out_degree.iter().copied().max().unwrap_or(0)
    }

    /// The smallest-index node of maximal out-degree, by full scan.
    pub fn leader(&self) -> usize {
        let m = self.max_degree();
        self.out_degree.iter().position(|&d| d == m).unwrap_or(0)
    }

    /// `N_k`: number of nodes of out-degree `k`.
    pub fn degree_histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for &d in &self.out_degree {
            *h.entry(d).or_insert(0) += 1;
        }
        h
    }

    /// Children of every node, each list in birth order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> =
            self.out_degree.iter().map(|&d| Vec::with_capacity(d as usize)).collect();
        for (child, &p) in self.parent.iter().enumerate().skip(1) {
            out[p].push(child);
        }
        out
    }

    /// Edge list `child,parent,birth_index,out_degree_final`, root omitted.
    pub fn write_edge_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "child,parent,birth_index,out_degree_final")?;
        for child in 1..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                child, self.parent[child], child, self.out_degree[child]
            )?;
        }
        Ok(())
    }
}

/// One attachment: at `step`, node `child` (equal to `step`) joined `parent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepEvent {
    pub step: usize,
    pub parent: usize,
    pub child: usize,
}

/// Receives every attachment in order, after the tree has been updated.
pub trait StepObserver {
    fn on_start(&mut self, _tree: &GrowthTree) {}
    fn on_step(&mut self, event: &StepEvent, tree: &GrowthTree);
}

/// Incremental driver of the discrete dynamics.
#[derive(Debug, Clone)]
pub struct TreeGrower {
    spec: AttachmentSpec,
    tree: GrowthTree,
    index: WeightedIndex,
    // f(0), f(1), ... for deterministic specs
    cache: Vec<f64>,
}

impl TreeGrower {
    pub fn new<R: Rng + ?Sized>(spec: AttachmentSpec, rng: &mut R) -> Result<Self> {
        let mut grower = TreeGrower {
            spec,
            tree: GrowthTree::default(),
            index: WeightedIndex::new(),
            cache: Vec::new(),
        };
        let w0 = grower.weight_at(0, rng)?;
        grower.tree = GrowthTree::root(w0);
        grower.index.push(w0)?;
        Ok(grower)
    }

    fn weight_at<R: Rng + ?Sized>(&mut self, degree: u64, rng: &mut R) -> Result<f64> {
        if !self.spec.is_deterministic() {
            return self.spec.sample_weight(degree, rng);
        }
        while self.cache.len() as u64 <= degree {
            let k = self.cache.len() as u64;
            self.cache.push(self.spec.weight(k)?);
        }
        Ok(self.cache[degree as usize])
    }

    pub fn tree(&self) -> &GrowthTree {
        &self.tree
    }

    pub fn spec(&self) -> &AttachmentSpec {
        &self.spec
    }

    pub fn into_tree(self) -> GrowthTree {
        self.tree
    }

    /// `Z`: the current total weight.
    pub fn total_weight(&self) -> f64 {
        self.index.total()
    }

    /// Draws a parent for the next attachment without performing it.
    pub fn sample_parent<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.index.sample(rng)
    }

    /// Performs one attachment and returns what happened.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepEvent> {
        let parent = self.index.sample(rng)?;
        let child = self.tree.len();
        let degree = self.tree.out_degree[parent] + 1;
        let w_parent = self.weight_at(degree, rng)?;
        let w_child = self.weight_at(0, rng)?;

        self.tree.out_degree[parent] = degree;
        self.tree.weight[parent] = w_parent;
        self.tree.parent.push(parent);
        self.tree.out_degree.push(0);
        self.tree.weight.push(w_child);
        self.index.set_weight(parent, w_parent)?;
        self.index.push(w_child)?;
        if self.index.updates_since_rebuild() >= REBUILD_EVERY {
            self.index.rebuild();
        }
        debug_assert!(
            !self.spec.is_deterministic()
                || self.spec.weight(self.tree.out_degree[parent]).ok() == Some(self.tree.weight[parent]),
            "cached weight out of sync with out-degree"
        );
        Ok(StepEvent { step: child, parent, child })
    }

    /// Runs `steps` attachments, notifying observers after each.
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        steps: usize,
        rng: &mut R,
        observers: &mut [&mut dyn StepObserver],
    ) -> Result<()> {
        self.tree.parent.reserve(steps);
        self.tree.out_degree.reserve(steps);
        self.tree.weight.reserve(steps);
        for _ in 0..steps {
            let event = self.step(rng)?;
            for obs in observers.iter_mut() {
                obs.on_step(&event, &self.tree);
            }
        }
        Ok(())
    }
}

/// Grows a tree for `steps` attachment rounds from the single root.
pub fn grow<R: Rng + ?Sized>(
    spec: &AttachmentSpec,
    steps: usize,
    rng: &mut R,
    observers: &mut [&mut dyn StepObserver],
) -> Result<GrowthTree> {
    let mut grower = TreeGrower::new(spec.clone(), rng)?;
    for obs in observers.iter_mut() {
        obs.on_start(grower.tree());
    }
    grower.run(steps, rng, observers)?;
    Ok(grower.into_tree())
}

/// Both sides of `Z <= 2 n kappa f(M) / (M + 1)` for a concrete tree, where
/// `n` is the node count and `M` the maximal out-degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionBound {
    pub nodes: usize,
    pub max_degree: u64,
    pub ln_total_weight: f64,
    pub ln_bound: f64,
    pub holds: bool,
}

impl PartitionBound {
    pub fn total_weight(&self) -> f64 {
        self.ln_total_weight.exp()
    }

    pub fn bound(&self) -> f64 {
        self.ln_bound.exp()
    }
}

/// Evaluates the partition-function bound on `tree` in log space. The degree
/// sum identity `sum_k (k + 1) N_k = 2n - 1 <= 2n` makes it hold whenever
/// `kappa` dominates `max_{i <= M} f(i)/(i+1)` relative to `f(M)/(M+1)`.
pub fn partition_bound_check(
    tree: &GrowthTree,
    spec: &AttachmentSpec,
    kappa: f64,
) -> Result<PartitionBound> {
    if !spec.is_deterministic() {
        return Err(Error::UnsupportedSpec("partition bound needs a deterministic spec".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    let hist = tree.degree_histogram();
    let terms: Vec<f64> = hist
        .iter()
        .map(|(&k, &count)| Ok(spec.ln_weight(k)? + (count as f64).ln()))
        .collect::<Result<_>>()?;
    let ln_total_weight = log_sum_exp(&terms);
    let m = tree.max_degree();
    let n = tree.len();
    let ln_bound = (2.0 * n as f64 * kappa).ln() + spec.ln_weight(m)? - ((m + 1) as f64).ln();
    let holds = ln_total_weight <= ln_bound + 1e-12 * ln_bound.abs().max(1.0);
    Ok(PartitionBound { nodes: n, max_degree: m, ln_total_weight, ln_bound, holds })
}

/// `ln(sum exp(x_i))` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
