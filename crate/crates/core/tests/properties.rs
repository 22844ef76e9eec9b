use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use l2plus::fixtures::random_stable;
use l2plus::harmonic::{harmonic_directions, uniform_floor, HarmonicObjective};
use l2plus::timedomain::{delay_demo, lp_norm, simulate, NormOrder, SampledSignal};
use l2plus::upper::residuals;
use l2plus::{
    augment, build_filter, fourier_coeffs, hinf_norm, matrix_l2plus_bruteforce, matrix_l2plus_lower, parseval_check,
    sweep, upsilon_sequence, BruteforceOptions, GridOptions, UpperOptions,
};

fn coarse_grid() -> GridOptions {
    GridOptions { per_decade: 30, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_partial_sums_close_in(n in 4usize..400) {
        let s = parseval_check(n).unwrap();
        prop_assert!(s <= 2.0 && s > 2.0 - 1.0 / (n * n) as f64, "{} {}", n, s);
        let c = fourier_coeffs(n).unwrap();
        prop_assert!((c.a0 - 2.0 / std::f64::consts::PI).abs() <= 1e-15);
        for m in (3..=n).step_by(2) {
            prop_assert_eq!(c.get(m), 0.0);
        }
    }

    #[test]
    fn directions_keep_magnitudes(seed in any::<u64>(), n in 1usize..20) {
        let g = random_stable(seed, 3, 3, 2);
        let (_, peak) = hinf_norm(&g, 1e-6).unwrap();
        let d = harmonic_directions(&peak, n).unwrap();
        prop_assert_eq!(d.vs.len(), n + 1);
        for vm in &d.vs {
            for (a, b) in vm.iter().zip(peak.v.iter()) {
                prop_assert!((a.norm() - b.norm()).abs() < 1e-12);
            }
        }
        prop_assert!((&d.vs[1] - &peak.v).norm() < 1e-12);
    }

    #[test]
    fn objective_ignores_common_phase(seed in any::<u64>(), phi in 0.0f64..6.28, w in 0.01f64..10.0) {
        let g = random_stable(seed, 3, 2, 2);
        let (_, mut peak) = hinf_norm(&g, 1e-6).unwrap();
        let base = HarmonicObjective::new(&g, &peak, 16).unwrap().value(w, 16).unwrap();
        if let l2plus::PeakKind::AtFinite(_) = peak.kind {
            peak.v *= Complex64::from_polar(1.0, phi);
            let rotated = HarmonicObjective::new(&g, &peak, 16).unwrap().value(w, 16).unwrap();
            prop_assert!((base - rotated).abs() < 1e-9 * base.max(1.0), "{} {}", base, rotated);
        }
    }

    #[test]
    fn matrix_bounds_are_ordered(entries in prop::collection::vec(-1.0f64..1.0, 9)) {
        let m = DMatrix::from_row_slice(3, 3, &entries);
        prop_assume!(m.norm() > 1e-6);
        let lower = matrix_l2plus_lower(&m).unwrap();
        let oracle = matrix_l2plus_bruteforce(&m, &BruteforceOptions::default()).unwrap();
        let sigma = m.singular_values().max();
        prop_assert!(oracle >= lower - 1e-9, "{} {}", oracle, lower);
        prop_assert!(lower >= sigma / 2f64.sqrt() - 1e-9);
        prop_assert!(oracle <= sigma + 1e-9);
    }

    #[test]
    fn nonnegative_matrix_lower_bound_is_the_norm(entries in prop::collection::vec(0.0f64..1.0, 6)) {
        let m = DMatrix::from_row_slice(2, 3, &entries);
        prop_assume!(m.norm() > 1e-6);
        let sigma = m.singular_values().max();
        prop_assert!((matrix_l2plus_lower(&m).unwrap() - sigma).abs() <= 1e-9 * sigma.max(1.0));
    }

    #[test]
    fn simulation_is_linear(seed in any::<u64>(), k in -3.0f64..3.0) {
        let g = random_stable(seed, 3, 2, 2);
        let sig = |s: f64| SampledSignal::from_fn(400, 0.01, 0.0, |t| DVector::from_vec(vec![(s * t).sin(), (2.0 * t).cos() * s])).unwrap();
        let (w1, w2) = (sig(1.0), sig(2.5));
        let sum = SampledSignal::new(w1.values.iter().zip(&w2.values).map(|(a, b)| a * k + b).collect(), 0.01, 0.0).unwrap();
        let (z1, z2, zs) = (simulate(&g, &w1).unwrap(), simulate(&g, &w2).unwrap(), simulate(&g, &sum).unwrap());
        for i in 0..400 {
            let want = &z1.values[i] * k + &z2.values[i];
            prop_assert!((&zs.values[i] - want).norm() < 1e-9);
        }
    }

    #[test]
    fn norms_are_homogeneous(vals in prop::collection::vec(-5.0f64..5.0, 2..200), c in -4.0f64..4.0) {
        let s = SampledSignal::new(vals.iter().map(|&x| DVector::from_element(1, x)).collect(), 0.1, 0.0).unwrap();
        let cs = SampledSignal::new(vals.iter().map(|&x| DVector::from_element(1, c * x)).collect(), 0.1, 0.0).unwrap();
        for p in [NormOrder::One, NormOrder::Two, NormOrder::Infinity] {
            prop_assert!((lp_norm(&cs, p) - c.abs() * lp_norm(&s, p)).abs() <= 1e-9 * (1.0 + lp_norm(&cs, p)));
        }
    }

    #[test]
    fn positive_systems_map_nonnegative_inputs_to_nonnegative_outputs(seed in any::<u64>()) {
        let g = random_stable(seed, 3, 2, 2);
        // entrywise magnitudes with a stabilizing diagonal give a Metzler, Hurwitz A
        let mut a = g.a().abs();
        for i in 0..3 {
            a[(i, i)] = -(a.row(i).sum() + 0.5);
        }
        let pos = l2plus::StateSpace::new(a, g.b().abs(), g.c().abs(), g.d().abs()).unwrap();
        prop_assert!(l2plus::lti::is_internally_positive(&pos));
        let w = SampledSignal::from_fn(500, 0.02, 0.0, |t| DVector::from_vec(vec![(3.0 * t).sin().max(0.0), (t * 7.0).cos().abs()])).unwrap();
        let z = simulate(&pos, &w).unwrap();
        prop_assert!(z.values.iter().all(|v| v.iter().all(|&x| x >= -1e-9)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bounds_are_sandwiched(seed in any::<u64>(), n in 1usize..=4, n_w in 1usize..=3, n_z in 1usize..=3) {
        let g = random_stable(seed, n, n_w, n_z);
        let (norm, _) = hinf_norm(&g, 1e-9).unwrap();
        let upper = sweep(&g, &[-1.0], 3, &UpperOptions::default()).unwrap();
        let lower = upsilon_sequence(&g, 32, &coarse_grid()).unwrap();
        let best_upper = upper.best().unwrap().gamma;
        for w in lower.windows(2) {
            prop_assert!(w[1].value >= w[0].value - 1e-9);
        }
        let best_lower = lower.last().unwrap().value;
        prop_assert!(best_lower >= uniform_floor(norm) - 1e-9 * norm.max(1.0));
        prop_assert!(best_lower <= best_upper + 1e-6 * best_upper.max(1.0), "{} > {}", best_lower, best_upper);
        prop_assert!(best_upper <= norm * (1.0 + 1e-3));
        let seq = upper.sequence(-1.0);
        for w in seq.windows(2) {
            prop_assert!(w[1].gamma <= w[0].gamma * (1.0 + 1e-3));
        }
        for cell in &upper.cells {
            let cert = cell.certificate.as_ref().unwrap();
            let aug = augment(&g, &build_filter(cell.alpha, cell.degree as i64, n_w).unwrap()).unwrap();
            let r = residuals(&aug, cert);
            prop_assert!(r.lmi_max_eig <= 1e-6 && r.m_min_entry >= 0.0, "{:?}", r);
        }
    }

    #[test]
    fn delay_ratios_converge_in_dt(p in prop::sample::select(vec![NormOrder::One, NormOrder::Two, NormOrder::Infinity])) {
        let coarse = delay_demo(1.0, p, 1e-3, 100.0).unwrap();
        let fine = delay_demo(1.0, p, 5e-4, 100.0).unwrap();
        prop_assert!((coarse.ratio / fine.ratio - 1.0).abs() < 2e-3);
    }
}
