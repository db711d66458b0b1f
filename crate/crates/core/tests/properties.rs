use infoconc::bounds::{
    c_p, compare, compare_probability, lemma5_mgf, thm_exp_tail, thm_gaus_tail, thm_mgf_bound, Sidedness, Verdict,
};
use infoconc::distributions::{make_standard, Family1D, ModelND, RngStream};
use infoconc::infotools::{empirical_tail, sample_information, McEstimate, TailScaling};
use infoconc::numerics::trigamma;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_bounds_decrease_in_t(t in 0.0f64..50.0, dt in 0.0f64..5.0, n in 1usize..200) {
        prop_assert!(thm_exp_tail(t + dt).value <= thm_exp_tail(t).value);
        prop_assert!(thm_gaus_tail(t + dt, n).value <= thm_gaus_tail(t, n).value);
    }

    #[test]
    fn mgf_bound_is_at_least_three(a in 0.0f64..5.0, n in 1usize..500) {
        let b = thm_mgf_bound(a, n);
        prop_assert!(b.value >= 3.0);
        prop_assert_eq!(b.in_window, a <= (n as f64).sqrt() / 4.0);
    }

    #[test]
    fn one_sided_order_p_bound_below_two_sided(p in 1.01f64..50.0, frac in 0.0f64..1.0) {
        let a = frac * (p - 1.0);
        let one = lemma5_mgf(a, p, Sidedness::OneSided).unwrap().value;
        let two = lemma5_mgf(a, p, Sidedness::TwoSided).unwrap().value;
        prop_assert!((two - 2.0 * one).abs() <= 1e-12 * two);
    }

    #[test]
    fn variance_caps_are_ordered(p in 1.01f64..200.0) {
        // trigamma(p) > 1/p and C_p - 1 > 1/p
        prop_assert!(trigamma(p).unwrap() > 1.0 / p);
        prop_assert!(c_p(p).unwrap() - 1.0 > 1.0 / p);
    }

    #[test]
    fn wilson_interval_is_ordered(k in 0usize..500, extra in 0usize..500, conf in 0.5f64..0.9999) {
        let m = k + extra + 1;
        let e = McEstimate::wilson(k, m, conf).unwrap();
        prop_assert!(0.0 <= e.ci_low && e.ci_low <= e.value && e.value <= e.ci_high && e.ci_high <= 1.0);
    }

    #[test]
    fn verdicts_follow_interval_position(lo in -5.0f64..5.0, w in 0.0f64..3.0, bound in -8.0f64..8.0) {
        let e = McEstimate { value: lo + w / 2.0, std_error: w / 6.0, ci_low: lo, ci_high: lo + w, m: 10, confidence_level: 0.99 };
        let v = compare(&e, bound).verdict;
        let want = if lo + w <= bound { Verdict::Holds } else if lo > bound { Verdict::Violated } else { Verdict::Inconclusive };
        prop_assert_eq!(v, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn empirical_tail_is_non_increasing(seed in 0u64..1000, n in 1usize..6) {
        let model = ModelND::iid(make_standard(Family1D::Laplace { loc: 0.0, scale: 1.0 }).unwrap(), n).unwrap();
        let batch = sample_information(&model, 3000, &RngStream::new(seed, 0), 2).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| 0.25 * i as f64).collect();
        let tail = empirical_tail(&batch, &grid, TailScaling::SqrtN, 0.999).unwrap();
        prop_assert_eq!(tail[0].estimate.value, 1.0);
        for w in tail.windows(2) {
            prop_assert!(w[1].estimate.value <= w[0].estimate.value);
        }
        // no log-concave model should violate the exponential tail bound
        for pt in &tail {
            prop_assert_ne!(compare_probability(&pt.estimate, thm_exp_tail(pt.t).value).verdict, Verdict::Violated);
        }
    }

    #[test]
    fn sampling_is_worker_independent(seed in 0u64..1000, workers in 2usize..6) {
        let model = ModelND::standard_gaussian(3).unwrap();
        let rng = RngStream::new(seed, 1);
        let a = sample_information(&model, 20_000, &rng, 1).unwrap();
        let b = sample_information(&model, 20_000, &rng, workers).unwrap();
        prop_assert_eq!(a.deviations, b.deviations);
    }
}
