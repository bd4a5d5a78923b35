use proptest::prelude::*;
use rand::SeedableRng;

use hubforge::cmj::{simulate_until_size, Caps};
use hubforge::criteria::malthus_sum;
use hubforge::hubs::{catch_up_set, exact_next_inverse_max, LeaderTracker};
use hubforge::numfmt::sig12;
use hubforge::pa_tree::{grow, partition_bound_check, GrowthTree, StepObserver, TreeGrower};
use hubforge::{AttachmentSpec, SimRng, WeightedIndex};

fn deterministic_spec() -> impl Strategy<Value = AttachmentSpec> {
    prop_oneof![
        (0.1f64..10.0).prop_map(|c| AttachmentSpec::constant(c).unwrap()),
        (0.0f64..5.0, 0.1f64..5.0).prop_map(|(a, b)| AttachmentSpec::linear(a, b).unwrap()),
        (0.0f64..3.0, 0.1f64..5.0).prop_map(|(p, c)| AttachmentSpec::power(p, c).unwrap()),
        Just(AttachmentSpec::parity_square()),
    ]
}

fn any_spec() -> impl Strategy<Value = AttachmentSpec> {
    prop_oneof![
        deterministic_spec(),
        Just("random:values=1|3,probs=0.5|0.5".parse().unwrap()),
        Just("random:values=0.5|2;1|5,probs=0.3|0.7;0.5|0.5,exponent=1".parse().unwrap()),
    ]
}

/// Degree of `v` once the first `t` nodes exist.
fn degree_at(tree: &GrowthTree, v: usize, t: usize) -> u64 {
    (1..t).filter(|&c| tree.parent(c) == Some(v)).count() as u64
}

/// Replays the tree node by node and checks every ancestor pair at every time.
fn brute_force_catch_up(tree: &GrowthTree) -> Vec<usize> {
    let n = tree.len();
    (0..n)
        .filter(|&u| {
            let mut v = u;
            while let Some(p) = tree.parent(v) {
                if !(u + 1..=n).any(|t| degree_at(tree, u, t) >= degree_at(tree, p, t)) {
                    return false;
                }
                v = p;
            }
            true
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fenwick_prefix_sums_match_rescan(weights in prop::collection::vec(0.0f64..100.0, 1..200),
                                        updates in prop::collection::vec((0usize..200, 0.0f64..100.0), 0..200)) {
        let mut idx = WeightedIndex::new();
        let mut plain = weights.clone();
        for &w in &weights {
            idx.push(w).unwrap();
        }
        for (i, w) in updates {
            let i = i % plain.len();
            plain[i] = w;
            idx.set_weight(i, w).unwrap();
        }
        let mut acc = 0.0;
        for (i, &w) in plain.iter().enumerate() {
            acc += w;
            prop_assert!((idx.prefix_sum(i + 1) - acc).abs() <= 1e-9 * acc.max(1.0));
        }
        prop_assert!((idx.total() - acc).abs() <= 1e-9 * acc.max(1.0));
    }

    #[test]
    fn sampler_never_returns_zero_weight(weights in prop::collection::vec(prop_oneof![Just(0.0), 0.1f64..10.0], 1..64),
                                         seed in any::<u64>()) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let mut idx = WeightedIndex::new();
        for &w in &weights {
            idx.push(w).unwrap();
        }
        let mut rng = SimRng::seed_from_u64(seed);
        for _ in 0..200 {
            let i = idx.sample(&mut rng).unwrap();
            prop_assert!(weights[i] > 0.0);
        }
    }

    #[test]
    fn malthus_sum_decreases_in_lambda(spec in deterministic_spec(), a in 0.1f64..20.0, b in 0.1f64..20.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let s_lo = malthus_sum(&spec, lo, 500).unwrap().partial;
        let s_hi = malthus_sum(&spec, hi, 500).unwrap().partial;
        prop_assert!(s_hi < s_lo);
    }

    #[test]
    fn grown_trees_are_consistent(spec in any_spec(), steps in 0usize..400, seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let tree = grow(&spec, steps, &mut rng, &mut []).unwrap();
        prop_assert_eq!(tree.len(), steps + 1);
        let total: u64 = tree.out_degrees().iter().sum();
        prop_assert_eq!(total as usize, steps);
        for v in 1..tree.len() {
            prop_assert!(tree.parent(v).unwrap() < v);
        }
    }

    #[test]
    fn partition_bound_holds_with_computed_kappa(spec in deterministic_spec(), steps in 1usize..500, seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let tree = grow(&spec, steps, &mut rng, &mut []).unwrap();
        let kappa = hubforge::criteria::kappa_of(&spec, tree.max_degree()).unwrap().kappa_horizon;
        let check = partition_bound_check(&tree, &spec, kappa).unwrap();
        prop_assert!(check.holds, "{:?}", check);
    }

    #[test]
    fn tracker_agrees_with_full_scan(spec in any_spec(), steps in 1usize..600, seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let mut grower = TreeGrower::new(spec, &mut rng).unwrap();
        let mut tracker = LeaderTracker::new(vec![]);
        tracker.on_start(grower.tree());
        for _ in 0..steps {
            let e = grower.step(&mut rng).unwrap();
            tracker.on_step(&e, grower.tree());
            prop_assert_eq!(tracker.leader(), grower.tree().leader());
        }
        let trace = tracker.finish();
        prop_assert!(trace.switches.windows(2).all(|w| w[0].leader != w[1].leader));
    }

    #[test]
    fn catch_up_set_matches_replay(spec in any_spec(), steps in 0usize..60, seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let tree = grow(&spec, steps, &mut rng, &mut []).unwrap();
        prop_assert_eq!(catch_up_set(&tree), brute_force_catch_up(&tree));
    }

    #[test]
    fn one_step_supermartingale_inequality(spec in prop_oneof![
            Just(AttachmentSpec::power(2.0, 1.0).unwrap()),
            Just(AttachmentSpec::linear(1.0, 1.0).unwrap()),
            Just(AttachmentSpec::parity_square()),
        ], steps in 1usize..2000, seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let tree = grow(&spec, steps, &mut rng, &mut []).unwrap();
        let kappa = hubforge::criteria::kappa_of(&spec, 10_000).unwrap().kappa();
        let n = tree.len() as f64;
        let m = tree.max_degree() as f64;
        let bound = (1.0 - 1.0 / (2.0 * n * kappa)) / m;
        prop_assert!(exact_next_inverse_max(&tree) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn jump_chain_times_increase(spec in any_spec(), n in 1usize..300, seed in any::<u64>()) {
        let mut rng = SimRng::seed_from_u64(seed);
        let (pop, chain) = simulate_until_size(&spec, n, Caps::default(), &mut rng).unwrap();
        prop_assert_eq!(pop.len(), n);
        prop_assert!(chain.jumps.windows(2).all(|w| w[0].time <= w[1].time));
        for (i, ind) in pop.individuals().iter().enumerate().skip(1) {
            let p = ind.parent().unwrap();
            prop_assert!(pop.individuals()[p].birth_time <= ind.birth_time);
            prop_assert_eq!(pop.ulam(i).len(), pop.ulam(p).len() + 1);
        }
    }

    #[test]
    fn spec_display_round_trips(spec in any_spec()) {
        let text = spec.to_string();
        let back: AttachmentSpec = text.parse().unwrap();
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn sig12_round_trips_to_twelve_digits(x in prop_oneof![-1e20f64..1e20, -1e-3f64..1e-3, -1e-9f64..1e-9]) {
        let s = sig12(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs(), "{} -> {}", x, s);
    }
}
