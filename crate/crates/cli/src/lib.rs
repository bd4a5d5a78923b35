//! Batch front-end for the hubforge experiments.
//!
//! Every subcommand writes an optional results CSV (`--out`, `-` for stdout),
//! an optional JSON report (`--report`), and prints a one-line summary, or the
//! report itself with `--json`.
//!
//! `--spec` takes `kind:key=value,...` with decimal parameters:
//!
//! ```text
//! constant:c=1
//! linear:a=1,b=1                              f(k) = a k + b
//! power:p=2,c=1                               f(k) = c (k+1)^p
//! table:values=1|2|3,tail=repeat-last         tail: repeat-last | linear-extrapolate | error
//! random:values=1|3,probs=0.5|0.5[,exponent=1]
//! random:values=1|2;1|3,probs=1|0;0.5|0.5     one law per degree, the last repeats
//! expr:f=<formula in k>[,lower=coef@exp@from][,upper=coef@exp@from]
//! parity-square                               (k+1)^2 at k = 1 and even k, k^2 - 1 otherwise
//! ```
//!
//! A `--config` file holds `key = value` lines named after the long flags
//! (`n_max` or `n-max`); arrays become comma lists and booleans toggle switches.
//! Exit codes: 0 success, 2 configuration error, 3 numeric precondition
//! failure, 1 anything else.

mod config;
pub mod embed;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hubforge::cmj::{killed_size, simulate_until_size, simulate_until_time, Caps};
use hubforge::criteria::{classify, ClassifyOptions};
use hubforge::hubs::{
    catch_up_census, estimate_phi, overtake_probability, persistence_experiment, supermartingale_check, track,
    PhiOutcome, SupermartingaleOptions, DEFAULT_RACE_HORIZON,
};
use hubforge::numfmt::sig12;
use hubforge::replicate::replicate_rng;
use hubforge::AttachmentSpec;
use serde_json::{json, Value};

pub use embed::{embed_check, EmbedReport};

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "HUBFORGE_THREADS";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(hubforge::Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hubforge::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numeric_precondition() => 3,
            CliError::Core(
                E::Parse { .. } | E::InvalidArgument(_) | E::UnsupportedSpec(_) | E::InvalidWeight(_) | E::NonPositiveWeight { .. },
            ) => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<hubforge::Error> for CliError {
    fn from(e: hubforge::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

fn parse_spec(s: &str) -> Result<AttachmentSpec, String> {
    s.parse::<AttachmentSpec>().map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "hubforge", version, about = "Persistent hub experiments on preferential attachment trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Attachment rule, e.g. `linear:a=1,b=1`.
    #[arg(long, value_parser = parse_spec)]
    pub spec: AttachmentSpec,
    /// Master seed; replicate streams are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; `HUBFORGE_THREADS` takes precedence.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Results CSV path, `-` for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the JSON report instead of the summary line.
    #[arg(long)]
    pub json: bool,
    /// `key = value` file whose entries act as flags placed before the command line's.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow one tree and track its leader.
    #[command(args_override_self = true)]
    Grow {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Node counts at which to record the leader.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<usize>,
    },
    /// Run the continuous-time branching process.
    #[command(args_override_self = true)]
    Cmj {
        #[command(flatten)]
        common: Common,
        /// Stop at this population size.
        #[arg(long, conflicts_with = "time", required_unless_present = "time")]
        size: Option<usize>,
        /// Stop at this time.
        #[arg(long)]
        time: Option<f64>,
        #[arg(long, default_value_t = 10_000_000)]
        max_events: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_population: usize,
    },
    /// Population size at an independent exponential killing time.
    #[command(name = "killed-size", args_override_self = true)]
    KilledSize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        replicates: usize,
    },
    /// Leader stabilization curve across replicates.
    #[command(args_override_self = true)]
    Persistence {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        checkpoints: Vec<usize>,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
    },
    /// Size of the catch-up set across replicates.
    #[command(args_override_self = true)]
    Catchup {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        nodes: usize,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
    },
    /// Overtake frequency against the maximal-inequality bound.
    #[command(args_override_self = true)]
    Overtake {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        #[arg(long, default_value_t = 10_000)]
        replicates: usize,
        #[arg(long, default_value_t = DEFAULT_RACE_HORIZON)]
        horizon: u64,
    },
    /// Monte Carlo estimate of the catch-up horizon of a child of rank j.
    #[command(args_override_self = true)]
    Phi {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        j: u64,
        #[arg(long, default_value_t = 10_000)]
        max_horizon: u64,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
    },
    /// One-step supermartingale inequality on random snapshots.
    #[command(args_override_self = true)]
    Supermartingale {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        snapshots: usize,
        #[arg(long, default_value_t = 10_000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 100_000)]
        continuations: usize,
        #[arg(long, default_value_t = 10_000)]
        exact_limit: usize,
        #[arg(long, default_value_t = 10_000)]
        kappa_horizon: u64,
    },
    /// Classify the rule by the numeric persistence criteria.
    #[command(args_override_self = true)]
    Criteria {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = hubforge::criteria::DEFAULT_TRUNCATION)]
        truncation: u64,
        #[arg(long, default_value_t = 10_000)]
        kappa_horizon: u64,
    },
    /// Compare the discrete tree with the CMJ jump chain.
    #[command(name = "embed-check", args_override_self = true)]
    EmbedCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        nodes: usize,
        #[arg(long, default_value_t = 20_000)]
        replicates: usize,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Grow { common, .. }
            | Command::Cmj { common, .. }
            | Command::KilledSize { common, .. }
            | Command::Persistence { common, .. }
            | Command::Catchup { common, .. }
            | Command::Overtake { common, .. }
            | Command::Phi { common, .. }
            | Command::Supermartingale { common, .. }
            | Command::Criteria { common, .. }
            | Command::EmbedCheck { common, .. } => common,
        }
    }
}

/// What a subcommand produced.
pub struct Output {
    pub csv: Vec<u8>,
    pub report: Value,
    pub summary: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// Runs the parsed command on the current rayon pool.
pub fn execute(command: &Command) -> Result<Output, CliError> {
    let seed = command.common().seed;
    let spec = &command.common().spec;
    let mut csv = Vec::new();
    let (report, summary) = match command {
        Command::Grow { steps, checkpoints, .. } => {
            let mut rng = replicate_rng(seed, 0);
            let (tree, trace) = track(spec, steps + 1, checkpoints.clone(), &mut rng)?;
            tree.write_edge_csv(&mut csv)?;
            let summary = format!(
                "grow: {} nodes, max degree {}, leader {}, {} switches",
                tree.len(),
                trace.final_max_degree,
                trace.final_leader,
                trace.switches.len()
            );
            (json!({ "spec": spec.to_string(), "nodes": tree.len(), "trace": trace }), summary)
        }
        Command::Cmj { size, time, max_events, max_population, .. } => {
            let caps = Caps { max_events: *max_events, max_population: *max_population };
            let mut rng = replicate_rng(seed, 0);
            let (pop, tied) = match (size, time) {
                (Some(n), _) => {
                    let (pop, chain) = simulate_until_size(spec, *n, caps, &mut rng)?;
                    (pop, chain.tied_times)
                }
                (None, Some(t)) => (simulate_until_time(spec, *t, caps, &mut rng)?, 0),
                (None, None) => return Err(CliError::Config("cmj needs --size or --time".into())),
            };
            pop.write_event_csv(&mut csv)?;
            let last_birth = pop.individuals().last().map_or(0.0, |i| i.birth_time);
            let summary = format!("cmj: {} individuals, last birth at {}", pop.len(), sig12(last_birth));
            let report = json!({
                "spec": spec.to_string(),
                "size": pop.len(),
                "last_birth_time": last_birth,
                "events": pop.events(),
                "tied_times": tied,
            });
            (report, summary)
        }
        Command::KilledSize { alpha, replicates, .. } => {
            let r = killed_size(spec, *alpha, *replicates, seed, Caps::default())?;
            writeln!(csv, "alpha,replicates,mean,std_error,q,q_tail_bound,exact")?;
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                sig12(r.alpha),
                r.replicates,
                sig12(r.mean),
                sig12(r.std_error),
                sig12(r.q),
                sig12(r.q_tail_bound),
                sig12(r.exact)
            )?;
            let summary = format!(
                "killed-size: mean {} +- {} (exact {})",
                sig12(r.mean),
                sig12(r.std_error),
                sig12(r.exact)
            );
            (to_value(&r), summary)
        }
        Command::Persistence { checkpoints, n_max, replicates, .. } => {
            let t = persistence_experiment(spec, checkpoints, *n_max, *replicates, seed)?;
            t.write_csv(&mut csv)?;
            let mut summary = String::from("persistence:");
            for p in &t.curve {
                write!(
                    summary,
                    " [{}] stable {} switch {}",
                    p.checkpoint,
                    sig12(p.stabilized_fraction),
                    sig12(p.window_switch_fraction)
                )
                .unwrap();
            }
            let report = json!({ "spec": spec.to_string(), "n_max": t.n_max, "replicates": t.replicates, "curve": t.curve });
            (report, summary)
        }
        Command::Catchup { nodes, replicates, .. } => {
            let c = catch_up_census(spec, *nodes, *replicates, seed)?;
            writeln!(csv, "replicate,catch_up_size")?;
            for (r, n) in c.counts.iter().enumerate() {
                writeln!(csv, "{r},{n}")?;
            }
            let summary = format!("catchup: median {}, mean {}", sig12(c.median), sig12(c.mean));
            (to_value(&c), summary)
        }
        Command::Overtake { k, lambda, y, replicates, horizon, .. } => {
            let r = overtake_probability(spec, *k, *lambda, *y, *replicates, *horizon, seed)?;
            writeln!(csv, "k,lambda,y,replicates,horizon,hits,empirical,std_error,bound")?;
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                r.k,
                sig12(r.lambda),
                sig12(r.y),
                r.replicates,
                r.horizon,
                r.hits,
                sig12(r.empirical),
                sig12(r.std_error),
                sig12(r.bound)
            )?;
            let summary = format!(
                "overtake: empirical {} +- {}, bound {}",
                sig12(r.empirical),
                sig12(r.std_error),
                sig12(r.bound)
            );
            (to_value(&r), summary)
        }
        Command::Phi { j, max_horizon, replicates, .. } => {
            let r = estimate_phi(spec, *j, *max_horizon, *replicates, seed)?;
            writeln!(csv, "j,replicates,max_horizon,status,phi,p_hat,lower,upper")?;
            let row = match r.outcome {
                PhiOutcome::Reached { phi, p_hat, lower, upper } => {
                    format!("reached,{phi},{},{},{}", sig12(p_hat), sig12(lower), sig12(upper))
                }
                PhiOutcome::NotReached => format!(
                    "not-reached,,{},{},{}",
                    sig12(r.p_hat_at_horizon),
                    sig12(r.interval_at_horizon.0),
                    sig12(r.interval_at_horizon.1)
                ),
                PhiOutcome::Inconclusive => format!(
                    "inconclusive,,{},{},{}",
                    sig12(r.p_hat_at_horizon),
                    sig12(r.interval_at_horizon.0),
                    sig12(r.interval_at_horizon.1)
                ),
            };
            writeln!(csv, "{},{},{},{row}", r.j, r.replicates, r.max_horizon)?;
            let summary = match r.outcome {
                PhiOutcome::Reached { phi, .. } => format!("phi: phi({j}) = {phi}"),
                PhiOutcome::NotReached => format!("phi: not reached by {max_horizon}"),
                PhiOutcome::Inconclusive => format!("phi: inconclusive at {max_horizon}"),
            };
            (to_value(&r), summary)
        }
        Command::Supermartingale { snapshots, max_nodes, continuations, exact_limit, kappa_horizon, .. } => {
            let opts = SupermartingaleOptions {
                snapshots: *snapshots,
                max_nodes: *max_nodes,
                continuations: *continuations,
                exact_limit: *exact_limit,
                kappa_horizon: *kappa_horizon,
            };
            let r = supermartingale_check(spec, &opts, seed)?;
            writeln!(csv, "snapshot,nodes,max_degree,expectation,std_error,bound,exact,pass")?;
            for (i, s) in r.snapshots.iter().enumerate() {
                writeln!(
                    csv,
                    "{i},{},{},{},{},{},{},{}",
                    s.nodes,
                    s.max_degree,
                    sig12(s.expectation),
                    sig12(s.std_error),
                    sig12(s.bound),
                    s.exact,
                    s.pass
                )?;
            }
            let summary = format!(
                "supermartingale: kappa {}, {} snapshots, {} violations",
                sig12(r.kappa),
                r.snapshots.len(),
                r.violations
            );
            (to_value(&r), summary)
        }
        Command::Criteria { truncation, kappa_horizon, .. } => {
            let opts = ClassifyOptions { truncation: *truncation, kappa_horizon: *kappa_horizon, ..Default::default() };
            let r = classify(spec, &opts);
            writeln!(csv, "name,partial,tail_bound,certified,note")?;
            for e in &r.evidence {
                writeln!(
                    csv,
                    "{},{},{},{},{}",
                    csv_field(&e.name),
                    opt(e.partial),
                    opt(e.tail_bound),
                    e.certified,
                    csv_field(&e.note)
                )?;
            }
            let route = r.theorem.map(|t| to_value(&t).as_str().unwrap_or_default().to_string());
            let summary = format!("criteria: {:?} via {}", r.verdict, route.as_deref().unwrap_or("none"));
            (to_value(&r), summary)
        }
        Command::EmbedCheck { nodes, replicates, .. } => {
            let r = embed_check(spec, *nodes, *replicates, seed)?;
            r.write_csv(&mut csv)?;
            let mut summary = format!("embed-check: {}", if r.pass { "pass" } else { "fail" });
            for t in &r.tests {
                match &t.test {
                    Some(c) => write!(summary, ", {} p = {}", t.name, sig12(c.p_value)).unwrap(),
                    None => write!(summary, ", {} skipped", t.name).unwrap(),
                }
            }
            (to_value(&r), summary)
        }
    };
    Ok(Output { csv, report, summary })
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={v} is not a positive integer"))),
        _ => match flag {
            Some(0) => Err(CliError::Config("--threads must be positive".into())),
            other => Ok(other),
        },
    }
}

fn run_inner(args: Vec<String>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let args = config::expand(args)?;
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Config(String::new()),
        _ => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            CliError::Config(first.trim_start_matches("error: ").to_string())
        }
    })?;
    let common = cli.command.common().clone();
    let output = match thread_count(common.threads)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| execute(&cli.command))?,
        None => execute(&cli.command)?,
    };
    let csv_to_stdout = common.out.as_deref().is_some_and(|p| p.as_os_str() == "-");
    match &common.out {
        Some(_) if csv_to_stdout => stdout.write_all(&output.csv)?,
        Some(path) => fs::write(path, &output.csv)?,
        None => {}
    }
    let pretty = serde_json::to_string_pretty(&output.report).expect("reports serialize") + "\n";
    if let Some(path) = &common.report {
        fs::write(path, &pretty)?;
    }
    if common.json {
        stdout.write_all(pretty.as_bytes())?;
    } else if !csv_to_stdout {
        writeln!(stdout, "{}", output.summary)?;
    }
    Ok(())
}

/// Runs the CLI on `args` (program name first), writing to the given streams,
/// and returns the exit code: 0 success, 2 configuration error, 3 numeric
/// precondition failure, 1 anything else.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let wants_info = args.iter().skip(1).any(|a| matches!(a.as_str(), "-h" | "--help" | "-V" | "--version"));
    if wants_info || args.len() <= 1 {
        return match Cli::try_parse_from(&args) {
            Ok(_) => 0,
            Err(e) => {
                let code = e.exit_code();
                let text = e.render().to_string();
                let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
                code
            }
        };
    }
    match run_inner(args, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "hubforge: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    run_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}
