use boolvol_core::dynamics::{estimate_C_distribution, estimate_joint, sample_noise_pair, DynamicsParams};
use boolvol_core::oracle::{exact_influence_report, exact_noise_covariance, exact_prob_one};
use boolvol_core::{make_instance, FunctionSpec};

#[test]
fn mean_switches_match_total_influence_over_horizons() {
    for (spec, p, t) in [
        (FunctionSpec::DictatorAndParity { m: 6 }, 0.5, 2.0),
        (FunctionSpec::BigInfluenceTame { n: 2 }, 0.5, 1.0),
        (FunctionSpec::AndOrTree { depth: 3 }, 0.3, 0.5),
    ] {
        let inst = make_instance(spec.clone()).unwrap();
        let exact = t * exact_influence_report(&inst, p).unwrap().total_i;
        let emp = estimate_C_distribution(&inst, &DynamicsParams::new(p, t, 3, 40_000).unwrap()).unwrap();
        assert!(emp.mean().within(exact, 4.0), "{spec}: {:?} vs {exact}", emp.mean());
    }
}

#[test]
fn initial_output_matches_exact_probability() {
    let inst = make_instance(FunctionSpec::IterMaj3 { depth: 2 }).unwrap();
    let exact = exact_prob_one(&inst, 0.35).unwrap();
    let emp = estimate_C_distribution(&inst, &DynamicsParams::new(0.35, 0.1, 5, 40_000).unwrap()).unwrap();
    assert!(emp.p_one().within(exact, 4.0));
}

#[test]
fn noise_pairs_match_exact_kernel() {
    let inst = make_instance(FunctionSpec::Majority { n: 7 }).unwrap();
    for eps in [0.1, 0.5] {
        let exact = exact_noise_covariance(&inst, 0.5, eps).unwrap();
        let js = sample_noise_pair(&inst, 0.5, eps, 40_000, 9).unwrap();
        assert!(((js.disagree - exact.disagree) / js.disagree_stderr).abs() < 4.0);
        let joint = estimate_joint(&inst, 0.5, -(1.0 - eps).ln(), 40_000, 10).unwrap();
        assert!(((joint.mean_product - exact.mean_product) / joint.mean_product_stderr).abs() < 4.0);
    }
}
