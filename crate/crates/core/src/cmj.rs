//! Continuous-time branching (CMJ) simulation with exponential-mixture clocks.
//!
//! Individual `u` has its `k+1`-th child an `Exp(F_u(k))` time after its
//! `k`-th (or after its own birth when `k = 0`). Births are processed from a
//! priority queue holding exactly one pending birth per individual. Ties in
//! time are broken by individual index, so a fixed seed replays exactly.
//!
//! Individuals are stored in birth order, so the index of an individual is its
//! label in the jump chain and in the discrete tree it induces.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::attachment::AttachmentSpec;
use crate::criteria;
use crate::error::{Error, Result};
use crate::numfmt::sig12;
use crate::pa_tree::GrowthTree;
use crate::replicate::try_run_replicates;
use crate::stats::mean_se;

const NO_PARENT: usize = usize::MAX;

/// Guards that turn runaway (possibly explosive) runs into typed errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Caps {
    pub max_events: u64,
    pub max_population: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_events: 10_000_000, max_population: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Individual {
    parent: usize,
    /// 1-based position among its siblings; 0 for the root.
    pub child_rank: u64,
    pub birth_time: f64,
    pub children: u64,
}

impl Individual {
    pub fn parent(&self) -> Option<usize> {
        (self.parent != NO_PARENT).then_some(self.parent)
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    individual: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.individual.cmp(&other.individual))
    }
}

/// One birth in the jump chain: at `time`, `child` was born to `parent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub child: usize,
    pub parent: usize,
}

/// The successive births; entry `k - 1` grows the population to `k + 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JumpChain {
    pub jumps: Vec<Jump>,
    /// Births that happened at exactly the previous birth time. Probability
    /// zero for exponential clocks; counted as a diagnostic.
    pub tied_times: u64,
}

impl JumpChain {
    /// `tau_k`, the time the population first reaches `k + 1` individuals.
    pub fn tau(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.jumps[k - 1].time
        }
    }
}

/// A running CMJ population.
#[derive(Debug, Clone)]
pub struct CmjPopulation {
    spec: AttachmentSpec,
    caps: Caps,
    individuals: Vec<Individual>,
    queue: BinaryHeap<Reverse<Pending>>,
    clock: f64,
    events: u64,
}

impl CmjPopulation {
    /// The root alone at time 0, with its first birth scheduled.
    pub fn new<R: Rng + ?Sized>(spec: AttachmentSpec, caps: Caps, rng: &mut R) -> Result<Self> {
        let mut pop = CmjPopulation {
            spec,
            caps,
            individuals: vec![Individual {
                parent: NO_PARENT,
                child_rank: 0,
                birth_time: 0.0,
                children: 0,
            }],
            queue: BinaryHeap::new(),
            clock: 0.0,
            events: 0,
        };
        pop.schedule(0, rng)?;
        Ok(pop)
    }

    fn schedule<R: Rng + ?Sized>(&mut self, individual: usize, rng: &mut R) -> Result<()> {
        // called right after the individual's birth or its latest child's birth
        let start = self.clock;
        let ind = &self.individuals[individual];
        let rate = self.spec.sample_weight(ind.children, rng)?;
        let wait = Exp::new(rate)
            .map_err(|_| Error::NonPositiveWeight { degree: ind.children, value: rate })?
            .sample(rng);
        self.queue.push(Reverse(Pending { time: start + wait, individual }));
        Ok(())
    }

    /// Time of the next birth, if any is pending.
    pub fn next_birth_time(&self) -> Option<f64> {
        self.queue.peek().map(|Reverse(p)| p.time)
    }

    /// Processes the earliest pending birth.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Jump> {
        if self.events >= self.caps.max_events {
            return Err(Error::CapExceeded { cap: self.caps.max_events });
        }
        let Reverse(next) = self.queue.pop().ok_or(Error::EmptyStructure)?;
        self.events += 1;
        self.clock = next.time;
        let parent = next.individual;
        self.individuals[parent].children += 1;
        let child = self.individuals.len();
        self.individuals.push(Individual {
            parent,
            child_rank: self.individuals[parent].children,
            birth_time: next.time,
            children: 0,
        });
        self.schedule(parent, rng)?;
        self.schedule(child, rng)?;
        Ok(Jump { time: next.time, child, parent })
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// `|{u : B(u) <= t}|`.
    pub fn size_at(&self, t: f64) -> usize {
        self.individuals.iter().filter(|i| i.birth_time <= t).count()
    }

    /// Ulam-Harris label of individual `i` as child ranks from the root down.
    pub fn ulam(&self, mut i: usize) -> Vec<u64> {
        let mut label = Vec::new();
        while let Some(p) = self.individuals[i].parent() {
            label.push(self.individuals[i].child_rank);
            i = p;
        }
        label.reverse();
        label
    }

    /// Dot-joined Ulam-Harris label, `root` for the empty word.
    pub fn ulam_string(&self, i: usize) -> String {
        let label = self.ulam(i);
        if label.is_empty() {
            "root".into()
        } else {
            label.iter().map(u64::to_string).collect::<Vec<_>>().join(".")
        }
    }

    /// The discrete tree obtained by labelling individuals in birth order.
    pub fn to_growth_tree(&self) -> Result<GrowthTree> {
        let parents: Vec<usize> = self.individuals[1..].iter().map(|i| i.parent).collect();
        GrowthTree::from_parents(&parents, &self.spec)
    }

    /// Event log `event_index,time,parent_ulam,child_rank`, one row per birth.
    pub fn write_event_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "event_index,time,parent_ulam,child_rank")?;
        for (i, ind) in self.individuals.iter().enumerate().skip(1) {
            writeln!(
                w,
                "{},{},{},{}",
                i,
                sig12(ind.birth_time),
                self.ulam_string(ind.parent),
                ind.child_rank
            )?;
        }
        Ok(())
    }
}

/// Runs until the population holds `n` individuals.
pub fn simulate_until_size<R: Rng + ?Sized>(
    spec: &AttachmentSpec,
    n: usize,
    caps: Caps,
    rng: &mut R,
) -> Result<(CmjPopulation, JumpChain)> {
    if n == 0 {
        return Err(Error::InvalidArgument("target size must be at least 1".into()));
    }
    let mut pop = CmjPopulation::new(spec.clone(), caps, rng)?;
    let mut chain = JumpChain::default();
    chain.jumps.reserve(n - 1);
    let mut last = 0.0;
    while pop.len() < n {
        let jump = pop.advance(rng)?;
        if jump.time == last {
            chain.tied_times += 1;
        }
        last = jump.time;
        chain.jumps.push(jump);
    }
    Ok((pop, chain))
}

/// Runs until the next birth would fall after time `t`.
pub fn simulate_until_time<R: Rng + ?Sized>(
    spec: &AttachmentSpec,
    t: f64,
    caps: Caps,
    rng: &mut R,
) -> Result<CmjPopulation> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time horizon must be >= 0, got {t}")));
    }
    let mut pop = CmjPopulation::new(spec.clone(), caps, rng)?;
    while pop.next_birth_time().is_some_and(|next| next <= t) {
        if pop.len() >= caps.max_population {
            return Err(Error::ExplosionSuspected {
                cap: caps.max_population,
                time: pop.clock(),
                horizon: t,
            });
        }
        pop.advance(rng)?;
    }
    Ok(pop)
}

/// Monte Carlo estimate of the population size at an independent `Exp(alpha)`
/// time, next to its exact value `1 / (1 - q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KilledSize {
    pub alpha: f64,
    pub replicates: usize,
    pub mean: f64,
    pub std_error: f64,
    /// `q = sum_{j >= 1} E exp(-alpha (X_1 + ... + X_j))`.
    pub q: f64,
    pub q_tail_bound: f64,
    pub exact: f64,
}

/// Expected size of the process killed at rate `alpha`. Requires `q < 1` to
/// be certified, which makes the expectation finite.
pub fn killed_size(
    spec: &AttachmentSpec,
    alpha: f64,
    replicates: usize,
    seed: u64,
    caps: Caps,
) -> Result<KilledSize> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let report = criteria::malthus_sum(spec, alpha, criteria::DEFAULT_TRUNCATION)?;
    if !(report.certified && report.partial + report.tail_bound < 1.0) {
        return Err(Error::DivergentExpectation(format!(
            "sum at alpha = {alpha} is {} (tail bound {}, certified: {}); need a certified value below 1",
            sig12(report.partial),
            sig12(report.tail_bound),
            report.certified
        )));
    }
    let kill = Exp::new(alpha).expect("alpha > 0");
    let sizes = try_run_replicates(seed, replicates, |_, rng| {
        let y = kill.sample(rng);
        simulate_until_time(spec, y, caps, rng).map(|pop| pop.len() as f64)
    })?;
    let (mean, std_error) = mean_se(&sizes);
    let q = report.partial;
    Ok(KilledSize {
        alpha,
        replicates,
        mean,
        std_error,
        q,
        q_tail_bound: report.tail_bound,
        exact: 1.0 / (1.0 - q),
    })
}

/// Number of individuals whose Ulam-Harris coordinates are all `<= k`.
pub fn k_moderate_census(pop: &CmjPopulation, k: u64) -> usize {
    let inds = pop.individuals();
    let mut moderate = vec![false; inds.len()];
    let mut count = 0;
    for (i, ind) in inds.iter().enumerate() {
        // parents are born before their children
        moderate[i] = match ind.parent() {
            None => true,
            Some(p) => moderate[p] && ind.child_rank <= k,
        };
        count += usize::from(moderate[i]);
    }
    count
}
