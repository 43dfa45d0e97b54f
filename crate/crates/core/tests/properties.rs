use boolvol_core::dynamics::{estimate_C_distribution, simulate_trajectory, DynamicsParams};
use boolvol_core::{make_instance, BitConfig, FunctionSpec, LevelProfile};
use proptest::prelude::*;

fn bits(n: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..2, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn andor_complement_symmetry(depth in 0u32..6, seed in any::<u64>()) {
        let inst = make_instance(FunctionSpec::AndOrTree { depth }).unwrap();
        let cfg = BitConfig::from_u64(seed, inst.arity().min(64));
        let cfg = if inst.arity() > 64 {
            let mut v = cfg.into_inner();
            v.extend((64..inst.arity()).map(|i| ((seed >> (i % 64)) & 1) as u8));
            BitConfig::new(v).unwrap()
        } else {
            cfg
        };
        let a = inst.evaluate(&cfg).unwrap();
        let b = inst.evaluate(&cfg.complement()).unwrap();
        prop_assert_eq!(a, !b);
    }

    #[test]
    fn percolation_monotone_in_edges(cfg in bits(30), edge in 0usize..30) {
        let inst = make_instance(FunctionSpec::TreePercolation { profile: LevelProfile::binary(4), level: 4 }).unwrap();
        let mut opened = cfg.clone();
        opened[edge] = 1;
        let mut closed = cfg.clone();
        closed[edge] = 0;
        let hi = inst.evaluate(&BitConfig::new(opened).unwrap()).unwrap();
        let lo = inst.evaluate(&BitConfig::new(closed).unwrap()).unwrap();
        prop_assert!(hi || !lo);
    }

    #[test]
    fn percolation_levels_are_nested(cfg in bits(2 + 6 + 12 + 24)) {
        let profile = LevelProfile::new(vec![2, 3, 2, 2]).unwrap();
        let mut prev = true;
        for level in 1..=4 {
            let inst = make_instance(FunctionSpec::TreePercolation { profile: profile.clone(), level }).unwrap();
            let out = inst.evaluate(&BitConfig::new(cfg[..inst.arity()].to_vec()).unwrap()).unwrap();
            prop_assert!(prev || !out, "level {} connected but level {} not", level, level - 1);
            prev = out;
        }
    }

    #[test]
    fn spec_text_round_trips(m in 1usize..40, d in 0u32..6) {
        for spec in [
            FunctionSpec::Parity { m },
            FunctionSpec::Dictator { m },
            FunctionSpec::Majority { n: 2 * m - 1 },
            FunctionSpec::IterMaj3 { depth: d },
            FunctionSpec::AndOrTree { depth: d },
        ] {
            let text = spec.to_string();
            prop_assert_eq!(text.parse::<FunctionSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn trajectories_alternate(seed in any::<u64>(), idx in 0u64..1000, horizon in 0.0f64..3.0) {
        let inst = make_instance(FunctionSpec::AndOrTree { depth: 3 }).unwrap();
        let params = DynamicsParams::new(0.5, horizon, seed, 1).unwrap();
        let tr = simulate_trajectory(&inst, &params, idx).unwrap();
        prop_assert_eq!(tr.c as usize, tr.switch_times.len());
        prop_assert!(tr.switch_times.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(tr.switch_times.iter().all(|&t| t > 0.0 && t <= horizon));
        let ups = tr.c - tr.s;
        prop_assert!(ups.abs_diff(tr.s) <= 1);
        if tr.c > 0 {
            // The first switch leaves the initial value.
            let expected_s = if tr.initial_output { tr.c.div_ceil(2) } else { tr.c / 2 };
            prop_assert_eq!(tr.s, expected_s);
        }
    }
}

#[test]
fn zero_horizon_histogram_is_all_zero() {
    let inst = make_instance(FunctionSpec::Parity { m: 4 }).unwrap();
    let emp = estimate_C_distribution(&inst, &DynamicsParams::new(0.5, 0.0, 1, 500).unwrap()).unwrap();
    assert_eq!(emp.histogram, vec![(0, 500)]);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let inst = make_instance(FunctionSpec::Majority { n: 15 }).unwrap();
    let params = DynamicsParams::new(0.4, 1.0, 7, 3000).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_C_distribution(&inst, &params).unwrap())
    };
    assert_eq!(run(1), run(4));
}
