//! Monte Carlo checks. Statistical thresholds come from the committed pilot
//! run, which used its own seed.

use hubforge::cmj::{killed_size, simulate_until_size, Caps};
use hubforge::criteria::{classify, ClassifyOptions, Verdict};
use hubforge::hubs::{
    catch_up_census, estimate_phi, last_switch_steps, max_growth_check, overtake_probability,
    persistence_experiment, supermartingale_check, PhiOutcome, SupermartingaleOptions,
};
use hubforge::pa_tree::grow;
use hubforge::replicate::{replicate_rng, run_replicates};
use hubforge::stats::{chi_square_gof, chi_square_two_sample};
use hubforge::{AttachmentSpec, WeightedIndex};
use serde_json::Value;

fn pilot() -> Value {
    serde_json::from_str(include_str!("../pilot/thresholds.json")).unwrap()
}

fn spec(s: &str) -> AttachmentSpec {
    s.parse().unwrap()
}

#[test]
fn sampler_matches_weights() {
    let mut idx = WeightedIndex::new();
    for w in 1..=10 {
        idx.push(w as f64).unwrap();
    }
    let mut rng = replicate_rng(11, 0);
    let mut counts = vec![0u64; 10];
    for _ in 0..100_000 {
        counts[idx.sample(&mut rng).unwrap()] += 1;
    }
    let probs: Vec<f64> = (1..=10).map(|w| w as f64 / 55.0).collect();
    assert!(chi_square_gof(&counts, &probs).p_value > 1e-3);
}

#[test]
fn killed_population_sizes() {
    let c = spec("constant:c=1");
    for (alpha, exact) in [(2.0, 2.0), (3.0, 1.5)] {
        let r = killed_size(&c, alpha, 4000, 21, Caps::default()).unwrap();
        assert!((r.exact - exact).abs() < 1e-9);
        assert!((r.mean - exact).abs() <= 3.0 * r.std_error, "{alpha}: {} +- {}", r.mean, r.std_error);
    }
    assert!(killed_size(&c, 1.0, 10, 1, Caps::default()).is_err());
}

#[test]
fn jump_chain_root_degree_matches_discrete_tree() {
    let s = spec("linear:a=1,b=1");
    let n = 30;
    let mut a = vec![0u64; n];
    let mut b = vec![0u64; n];
    let disc = run_replicates(31, 4000, |_, rng| grow(&s, n - 1, rng, &mut []).unwrap().out_degree(0));
    let cont = run_replicates(32, 4000, |_, rng| {
        simulate_until_size(&s, n, Caps::default(), rng).unwrap().0.individuals()[0].children as u64
    });
    for d in disc {
        a[d as usize] += 1;
    }
    for d in cont {
        b[d as usize] += 1;
    }
    assert!(chi_square_two_sample(&a, &b).p_value > 1e-3);
}

#[test]
fn overtake_frequency_respects_bound() {
    let s = spec("linear:a=1,b=1");
    for (k, lambda, y) in [(3, 1.0, 0.0), (2, 0.5, 0.0), (4, 2.0, 0.5)] {
        let r = overtake_probability(&s, k, lambda, y, 20_000, 500, 41).unwrap();
        assert!(r.empirical <= r.bound + 3.0 * r.std_error, "{k} {lambda} {y}: {r:?}");
    }
    let r = overtake_probability(&s, 3, 1.0, 30.0, 2000, 200, 42).unwrap();
    assert!(r.hits == 0 && r.bound < 1e-10);
}

#[test]
fn phi_is_finite_without_persistence_and_not_reached_with_it() {
    let p = pilot();
    let pilot_phi = p["phi"]["constant_j1"].as_u64().unwrap();
    let c = estimate_phi(&spec("constant:c=1"), 1, 10_000, 2000, 51).unwrap();
    match c.outcome {
        PhiOutcome::Reached { phi, .. } => assert!(phi.abs_diff(pilot_phi) <= 2, "{phi} vs {pilot_phi}"),
        other => panic!("{other:?}"),
    }
    let s = estimate_phi(&spec("power:p=2,c=1"), 1, 10_000, 1000, 52).unwrap();
    assert_eq!(s.outcome, PhiOutcome::NotReached);
}

#[test]
fn constant_rule_keeps_switching_late() {
    let p = pilot();
    let threshold = p["constant_last_switch"]["threshold"].as_f64().unwrap();
    let steps = last_switch_steps(&spec("constant:c=1"), 10_000, 300, 61).unwrap();
    let late = steps.iter().filter(|s| s.is_some_and(|s| s > 100)).count() as f64 / steps.len() as f64;
    assert!(late > 0.5);
    // the pilot margin was set for 500 runs; this is a 300-run sanity bound
    assert!(late >= threshold - 0.05, "{late} vs {threshold}");
}

#[test]
fn catch_up_census_is_stable_for_square_rule() {
    let p = pilot();
    let drift = p["catch_up_census_power2"]["allowed_drift"].as_f64().unwrap();
    let s = spec("power:p=2,c=1");
    let small = catch_up_census(&s, 1000, 100, 71).unwrap();
    let large = catch_up_census(&s, 10_000, 100, 72).unwrap();
    assert!((small.median - large.median).abs() <= drift);
    assert!(catch_up_census(&s, 1, 3, 73).unwrap().counts.iter().all(|&c| c == 1));
}

#[test]
fn supermartingale_holds_exactly_on_snapshots() {
    for s in ["power:p=2,c=1", "linear:a=1,b=1"] {
        let opts = SupermartingaleOptions { snapshots: 100, max_nodes: 3000, ..Default::default() };
        let r = supermartingale_check(&spec(s), &opts, 81).unwrap();
        assert_eq!(r.violations, 0, "{s}");
        assert!(r.snapshots.iter().all(|v| v.exact));
    }
    let opts = SupermartingaleOptions {
        snapshots: 3,
        max_nodes: 20_000,
        exact_limit: 10,
        continuations: 20_000,
        ..Default::default()
    };
    let r = supermartingale_check(&spec("power:p=2,c=1"), &opts, 82).unwrap();
    assert!(r.snapshots.iter().all(|v| !v.exact && v.pass));
}

#[test]
fn maximal_degree_grows_fast_enough() {
    let r = max_growth_check(&spec("power:p=2,c=1"), 0.1, 5000, 200, 91).unwrap();
    assert!(r.holds);
    assert!(r.fraction >= 0.9);
}

#[test]
fn classifier_orders_stabilization() {
    let opts = ClassifyOptions::default();
    let unique = spec("power:p=2,c=1");
    let none = spec("constant:c=1");
    assert_eq!(classify(&unique, &opts).verdict, Verdict::UniquePersistentHub);
    assert_eq!(classify(&none, &opts).verdict, Verdict::NoPersistentHub);
    let a = persistence_experiment(&unique, &[1000], 10_000, 200, 101).unwrap();
    let b = persistence_experiment(&none, &[1000], 10_000, 200, 102).unwrap();
    assert!(a.curve[0].stabilized_fraction > b.curve[0].stabilized_fraction);
    assert!(a.curve[0].window_switch_fraction < b.curve[0].window_switch_fraction);
}
