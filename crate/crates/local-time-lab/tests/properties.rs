use proptest::prelude::*;

use local_time_lab::brownian::{local_time_field, sample_path_stream};
use local_time_lab::chaos::{kernel_f_h, kernel_g_h_t, minmax_inner_product, phi_1d, ChaosSpec, FnKernel, IndexVector};
use local_time_lab::experiment::{ExperimentConfig, ScalingPoint, ScalingReport, SlopeVerdict};
use local_time_lab::gaussian::{expected_heat_deriv, heat_kernel_deriv, hermite, HeatKernelPoint, HermiteOrder};
use local_time_lab::quad::QuadratureConfig;
use local_time_lab::riesz::{g_h_eval, RieszSpec};
use local_time_lab::simplex::{blocks_from_permutation, extremal_bound, regularized_value, SingularIntegral};
use local_time_lab::stats::{fit_loglog, Moments};
use local_time_lab::variance::varphi_closed_form;

fn q() -> QuadratureConfig {
    QuadratureConfig::with_tolerances(1e-300, 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hermite_parity(n in 0usize..16, x in -4.0f64..4.0) {
        let a = hermite(HermiteOrder(n), x);
        let b = hermite(HermiteOrder(n), -x);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((a - sign * b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn zero_variance_is_pointwise(n in 0usize..8, t in 0.05f64..2.0, y in -2.0f64..2.0) {
        let a = expected_heat_deriv(n, t, y, 0.0).unwrap();
        let b = heat_kernel_deriv(HeatKernelPoint::new(n, t, y).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn f_kernel_is_permutation_symmetric(
        m in 1usize..4,
        times in proptest::collection::vec(0.01f64..0.99, 8),
        rot in 0usize..8,
    ) {
        let spec = ChaosSpec::new(m, 0.05, 1.0).unwrap();
        let mut ts: Vec<f64> = times[..2 * m].to_vec();
        let a = kernel_f_h(&spec, &ts);
        let b = kernel_g_h_t(&spec, &ts);
        ts.rotate_left(rot % (2 * m));
        ts.reverse();
        match (a, kernel_f_h(&spec, &ts)) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "permutation changed validity"),
        }
        if let (Ok(x), Ok(y)) = (b, kernel_g_h_t(&spec, &ts)) {
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn phi_is_translation_invariant(m in 1usize..4, t1 in 0.0f64..0.4, lag in 0.01f64..0.5, c in 0.0f64..0.1) {
        let a = phi_1d(m, 0.02, t1, t1 + lag, &q()).unwrap().value;
        let b = phi_1d(m, 0.02, t1 + c, t1 + lag + c, &q()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-7 * a.abs().max(1e-300));
    }

    #[test]
    fn varphi_is_homogeneous_of_degree_two(x in -3.0f64..3.0, y in -3.0f64..3.0, lam in 0.1f64..10.0) {
        let a = varphi_closed_form(lam * x, lam * y);
        let b = lam * lam * varphi_closed_form(x, y);
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()) * lam * lam);
        prop_assert!((varphi_closed_form(x, y) - varphi_closed_form(y, x)).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn index_counts_add_up(entries in proptest::collection::vec(1u8..=2, 1..6).prop_flat_map(|v| {
        let n = v.len();
        (Just(v), proptest::collection::vec(1u8..=2, n))
    }).prop_map(|(a, b)| [a, b].concat())) {
        let iv = IndexVector::new(entries.clone()).unwrap();
        let (a, b) = iv.counts();
        prop_assert_eq!(a + b, entries.len());
    }

    #[test]
    fn g_h_is_even(beta in 0.55f64..1.0, x in 0.001f64..0.5) {
        let spec = RieszSpec::new(beta, 0.1).unwrap();
        let a = g_h_eval(&spec, x, &q()).unwrap().value;
        let b = g_h_eval(&spec, -x, &q()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * a.abs());
        prop_assert!(a > 0.0);
    }

    #[test]
    fn block_families_respect_invariants(perm in Just((1usize..=8).collect::<Vec<_>>()).prop_shuffle()) {
        if let Some(fam) = blocks_from_permutation(&perm).unwrap() {
            prop_assert!(fam.check_invariants().is_ok());
            prop_assert_eq!(fam.canonical(), fam.canonical().canonical());
            prop_assert_eq!(fam.reflected().reflected(), fam.clone());
            prop_assert!(fam.dominated_by(&extremal_bound(&fam).unwrap().dominating_family()));
        }
    }

    #[test]
    fn log_log_fit_recovers_power(p in -4.0f64..4.0, c in 0.1f64..10.0) {
        let pts: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05, 0.025].iter().map(|&h: &f64| (h, c * h.powf(p))).collect();
        let f = fit_loglog(&pts).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-10);
    }

    #[test]
    fn moments_merge_in_any_split(xs in proptest::collection::vec(-100.0f64..100.0, 2..60), k in 0usize..60) {
        let k = k % xs.len();
        let all = Moments::from_slice(&xs);
        let m = Moments::from_slice(&xs[..k]).merge(Moments::from_slice(&xs[k..]));
        prop_assert!((all.mean - m.mean).abs() < 1e-9);
        prop_assert!((all.variance() - m.variance()).abs() < 1e-7 * (1.0 + all.variance()));
    }

    #[test]
    fn widening_tolerance_never_fails_a_pass(
        noise in proptest::collection::vec(-0.3f64..0.3, 4),
        target in 1.0f64..5.0,
        t1 in 0.0f64..1.0,
        extra in 0.0f64..1.0,
    ) {
        let pts: Vec<ScalingPoint> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .zip(&noise)
            .map(|(&h, e): (&f64, &f64)| ScalingPoint { h, statistic: h.powf(3.0) * e.exp(), std_error: 0.0 })
            .collect();
        let a = ScalingReport::from_points(pts.clone(), target, t1).unwrap();
        let b = ScalingReport::from_points(pts, target, t1 + extra).unwrap();
        if a.verdict == SlopeVerdict::Pass {
            prop_assert_eq!(b.verdict, SlopeVerdict::Pass);
        }
    }

    #[test]
    fn decreasing_grids_are_accepted(start in 0.05f64..0.5, ratios in proptest::collection::vec(0.1f64..0.9, 3..6)) {
        let mut hs = vec![start];
        for r in &ratios {
            hs.push(hs.last().unwrap() * r);
        }
        let list = |v: &[f64]| v.iter().map(|h| format!("{h:e}")).collect::<Vec<_>>().join(",");
        let ok = format!("experiment = riesz-scaling\nh = {}\n", list(&hs));
        prop_assert!(ExperimentConfig::parse(&ok).is_ok());
        hs.swap(0, 1);
        let bad = format!("experiment = riesz-scaling\nh = {}\n", list(&hs));
        prop_assert!(ExperimentConfig::parse(&bad).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn inner_product_is_symmetric_and_bilinear(a in -2.0f64..2.0, b in -2.0f64..2.0, m in 1usize..3) {
        let q = QuadratureConfig::with_tolerances(1e-300, 1e-10);
        let k1 = FnKernel(|lo: f64, hi: f64| (hi - lo) * (1.0 + lo));
        let k2 = FnKernel(|lo: f64, hi: f64| (-(hi - lo)).exp() + hi);
        let k3 = FnKernel(|lo: f64, hi: f64| lo * hi);
        let mix = FnKernel(move |lo: f64, hi: f64| a * ((-(hi - lo)).exp() + hi) + b * lo * hi);
        let ip = |x: &dyn local_time_lab::chaos::MinMaxKernel, y: &dyn local_time_lab::chaos::MinMaxKernel| {
            minmax_inner_product(x, y, m, 0.8, 0.8, &q).unwrap().value
        };
        let s12 = ip(&k1, &k2);
        prop_assert!((s12 - ip(&k2, &k1)).abs() <= 1e-9 * s12.abs());
        let lhs = ip(&k1, &mix);
        let rhs = a * s12 + b * ip(&k1, &k3);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (s12.abs() + rhs.abs()));
    }

    #[test]
    fn regularized_values_grow_as_eps_shrinks(delta in 0.1f64..0.6, seed in 0u64..1000) {
        for which in [SingularIntegral::Sing1, SingularIntegral::Sing2, SingularIntegral::Sing3] {
            let v1 = regularized_value(which, delta, 1e-2, 500, seed).unwrap().value;
            let v2 = regularized_value(which, delta, 1e-3, 500, seed).unwrap().value;
            prop_assert!(v2 >= v1);
        }
    }

    #[test]
    fn occupation_measure_has_total_mass_t(seed in 0u64..10_000, bw in 0.001f64..0.1) {
        let p = sample_path_stream(1, 2048, 1.0, seed, 0).unwrap();
        let f = local_time_field(&p, bw).unwrap();
        prop_assert!((f.total_time() - 1.0).abs() < 1e-12);
        let p2 = sample_path_stream(1, 2048, 1.0, seed, 0).unwrap();
        prop_assert_eq!(p, p2);
    }
}
