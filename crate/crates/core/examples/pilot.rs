//! Pilot calibration run. Fixes the thresholds used by the persistence tests
//! from an independent seed and writes them as JSON.
//!
//! cargo run --release -p hubforge-core --example pilot -- crates/core/pilot/thresholds.json

use std::fs;

use hubforge::hubs::{
    catch_up_census, estimate_phi, last_switch_steps, max_growth_check, persistence_experiment, PhiOutcome,
};
use hubforge::replicate::stream_seed;
use hubforge::AttachmentSpec;
use serde_json::json;

const PILOT_SEED: u64 = 0x05EE_D0F9_1707;
const REPLICATES: usize = 500;

/// `p_hat - 4 sqrt(2 p~(1-p~)/n)`, with the Agresti-Coull `p~` keeping the
/// margin positive when `p_hat` sits at 0 or 1.
fn threshold(p_hat: f64, n: usize) -> f64 {
    let n = n as f64;
    let p = (p_hat * n + 2.0) / (n + 4.0);
    (p_hat - 4.0 * (2.0 * p * (1.0 - p) / n).sqrt()).max(0.0)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "crates/core/pilot/thresholds.json".into());
    let square = AttachmentSpec::power(2.0, 1.0)?;
    let constant = AttachmentSpec::constant(1.0)?;

    let stab = persistence_experiment(&square, &[1000], 100_000, REPLICATES, stream_seed(PILOT_SEED, "stabilization"))?;
    let p_stab = stab.curve[0].stabilized_fraction;

    let switch = persistence_experiment(&constant, &[1000], 10_000, REPLICATES, stream_seed(PILOT_SEED, "switching"))?;
    let p_switch = switch.curve[0].window_switch_fraction;

    let mut last: Vec<usize> = last_switch_steps(&constant, 10_000, REPLICATES, stream_seed(PILOT_SEED, "last-switch"))?
        .into_iter()
        .map(|s| s.unwrap_or(0))
        .collect();
    last.sort_unstable();
    let above_100 = last.iter().filter(|&&s| s > 100).count() as f64 / REPLICATES as f64;

    let phi_c = estimate_phi(&constant, 1, 10_000, 2000, stream_seed(PILOT_SEED, "phi-constant"))?;
    let phi_s = estimate_phi(&square, 1, 10_000, 2000, stream_seed(PILOT_SEED, "phi-square"))?;
    let phi_c_value = match phi_c.outcome {
        PhiOutcome::Reached { phi, .. } => Some(phi),
        _ => None,
    };

    let census_small = catch_up_census(&square, 1000, 200, stream_seed(PILOT_SEED, "census-1e3"))?;
    let census_large = catch_up_census(&square, 10_000, 200, stream_seed(PILOT_SEED, "census-1e4"))?;

    let growth = max_growth_check(&square, 0.1, 10_000, REPLICATES, stream_seed(PILOT_SEED, "max-growth"))?;

    let report = json!({
        "seed": PILOT_SEED,
        "replicates": REPLICATES,
        "threshold_rule": "p_hat - 4*sqrt(2*p(1-p)/n), p = (x+2)/(n+4)",
        "power2_stabilization": {
            "spec": square.to_string(), "checkpoint": 1000, "n_max": 100_000,
            "p_hat": p_stab, "threshold": threshold(p_stab, REPLICATES),
        },
        "constant_window_switch": {
            "spec": constant.to_string(), "window": [1000, 10_000],
            "p_hat": p_switch, "threshold": threshold(p_switch, REPLICATES),
        },
        "constant_last_switch": {
            "nodes": 10_000, "median": last[last.len() / 2],
            "fraction_above_100": above_100, "threshold": threshold(above_100, REPLICATES),
        },
        "phi": {
            "constant_j1": phi_c_value,
            "constant_j1_estimate": phi_c,
            "power2_j1_estimate": phi_s,
        },
        "catch_up_census_power2": {
            "median_1e3": census_small.median, "median_1e4": census_large.median,
            "allowed_drift": 2.0 + (census_small.median - census_large.median).abs(),
        },
        "max_growth_power2": {
            "epsilon": growth.epsilon, "r": growth.r, "c_min": growth.c_min,
            "fraction": growth.fraction, "threshold": threshold(growth.fraction, REPLICATES),
        },
    });
    if let Some(dir) = std::path::Path::new(&out).parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
