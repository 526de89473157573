//! Property tests for the structural invariants.

mod common;

use common::*;
use kdvnf::audit::{audit_symbol, symbol_ratio, SymbolCase};
use kdvnf::field::{convolve, convolve_direct, sobolev_norm, SpectralField};
use kdvnf::multipliers::{h2, h3, n_ell, symbol_n, symbol_t, t_ell, ChiSpec};
use kdvnf::norms::{norm_y, norm_z, weight, WeightKind, WeightSpec};
use kdvnf::phase::{propagate, PhaseData};
use kdvnf::spacetime::{st_inverse, st_transform, TimeGrid, TimeSamples, Window};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn field(n_max: usize, seed: u64, decay: f64) -> SpectralField {
    SpectralField::random(n_max, &mut rng(seed), |n| (1.0 + (n * n) as f64).powf(-decay / 2.0))
}

fn nonzero() -> impl Strategy<Value = i64> {
    (1i64..40).prop_flat_map(|a| prop_oneof![Just(a), Just(-a)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_is_symmetric_real_and_matches_direct_sum(n in 1usize..40, sa in any::<u64>(), sb in any::<u64>()) {
        let (a, b) = (field(n, sa, 0.5), field(n, sb, 1.0));
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        let direct = convolve_direct(&a, &b).unwrap();
        let scale = a.l2_norm() * b.l2_norm();
        prop_assert!(ab.sub(&ba).unwrap().l2_norm() <= 1e-12 * scale);
        prop_assert!(ab.sub(&direct).unwrap().l2_norm() <= 1e-12 * scale);
        prop_assert!(ab.max_asymmetry() <= 1e-12);
        let lin = convolve(&a.scale(2.5).add(&b).unwrap(), &b).unwrap();
        let expect = ab.scale(2.5).add(&convolve(&b, &b).unwrap()).unwrap();
        prop_assert!(lin.sub(&expect).unwrap().l2_norm() <= 1e-12 * scale.max(b.l2_norm().powi(2)));
    }

    #[test]
    fn parseval(n in 1usize..40, seed in any::<u64>()) {
        let u = field(n, seed, 0.0);
        let grid = u.to_grid((2 * n + 1).next_power_of_two());
        let mean_sq = grid.iter().map(|x| x * x).sum::<f64>() / grid.len() as f64;
        prop_assert!((sobolev_norm(&u, 0.0).powi(2) - mean_sq).abs() <= 1e-12 * mean_sq);
    }

    #[test]
    fn propagator_is_unitary_and_a_group(n in 1usize..32, seed in any::<u64>(), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0, s in 0.5f64..0.66) {
        let f = field(n, seed, 1.0);
        let phase = kdvnf::phase::compute_phi(&f.scale(0.3), s);
        let a = propagate(&f, &phase, t1);
        prop_assert!((a.l2_norm() - f.l2_norm()).abs() <= 1e-13 * f.l2_norm());
        let b = propagate(&a, &phase, t2);
        let c = propagate(&f, &phase, t1 + t2);
        prop_assert!(b.sub(&c).unwrap().l2_norm() <= 1e-12 * f.l2_norm() * (1.0 + (n as f64).powi(3) * (t1.abs() + t2.abs()) * 1e-4));
        prop_assert!(b.max_asymmetry() <= 1e-12);
    }

    #[test]
    fn symbols_have_conjugate_parity_and_cancel_the_resonance(n1 in nonzero(), n2 in nonzero(), s in 0.5f64..0.66) {
        prop_assume!(n1 + n2 != 0);
        prop_assert!((symbol_n(-n1, -n2, s) - symbol_n(n1, n2, s).conj()).norm() <= 1e-12 * symbol_n(n1, n2, s).norm());
        prop_assert_eq!(symbol_t(-n1, -n2, s), symbol_t(n1, n2, s));
        let lhs = Complex64::new(0.0, -(h2(n1, n2) as f64)) * symbol_t(n1, n2, s);
        prop_assert!((lhs - symbol_n(n1, n2, s)).norm() <= 1e-12 * symbol_n(n1, n2, s).norm());
        prop_assert_eq!(h2(n1, n2), 3 * (n1 + n2) * n1 * n2);
    }

    #[test]
    fn cubic_resonance_factorizes(n1 in -60i64..60, n2 in -60i64..60, n3 in -60i64..60) {
        let n = n1 + n2 + n3;
        prop_assert_eq!(n.pow(3) - n1.pow(3) - n2.pow(3) - n3.pow(3), 3 * (n1 + n2) * (n2 + n3) * (n3 + n1));
        prop_assert_eq!(3 * h3(n1, n2, n3), n.pow(3) - n1.pow(3) - n2.pow(3) - n3.pow(3));
    }

    #[test]
    fn cutoff_is_a_monotone_unit_ramp(n in nonzero(), k in nonzero(), b1 in 1.0f64..1e6, b2 in 1.0f64..1e6, c in 0.5f64..5.0, ramp in 1.5f64..8.0) {
        let spec = ChiSpec::new(PhaseData::zero(1, 0.55)).with_ramp(c, ramp);
        prop_assert_eq!(spec.threshold(n, k), spec.threshold(k, n));
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let (wl, wh) = (spec.weight(lo, n, k), spec.weight(hi, n, k));
        prop_assert!((0.0..=1.0).contains(&wl) && (0.0..=1.0).contains(&wh));
        prop_assert!(wh <= wl);
        let theta = spec.threshold(n, k);
        prop_assert_eq!(spec.weight(theta, n, k), 1.0);
        prop_assert_eq!(spec.weight(ramp * theta, n, k), 0.0);
    }

    #[test]
    fn weights_are_monotone_in_modulation(n in nonzero(), l1 in 1.0f64..1e7, l2 in 1.0f64..1e7, s in 0.5f64..0.66) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        for kind in [WeightKind::Y, WeightKind::Z] {
            let spec = WeightSpec::new(kind).with_s(s);
            if spec.low_branch(n, lo) == spec.low_branch(n, hi) {
                prop_assert!(weight(&spec, n, lo) <= weight(&spec, n, hi));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lattice_operators_preserve_realness_and_norms_scale(seed in any::<u64>(), a in -4.0f64..4.0, s in 0.5f64..0.66) {
        let phase = phase_for(6, s, seed);
        let u = random_lattice(6, 32, seed, &phase);
        let spec = ChiSpec::new(phase.clone());
        prop_assert!(t_ell(&u, &u, s, &spec).unwrap().max_asymmetry() <= 1e-10);
        prop_assert!(n_ell(&u, &u, s, &spec).unwrap().max_asymmetry() <= 1e-10);
        let (y, z) = (norm_y(&u, &phase, 0.01).unwrap(), norm_z(&u, &phase, 0.01).unwrap());
        let scaled = u.scale(a);
        prop_assert!((norm_y(&scaled, &phase, 0.01).unwrap() - a.abs() * y).abs() <= 1e-12 * y * a.abs().max(1.0));
        prop_assert!((norm_z(&scaled, &phase, 0.01).unwrap() - a.abs() * z).abs() <= 1e-12 * z * a.abs().max(1.0));
    }

    #[test]
    fn space_time_transform_applies_the_window(seed in any::<u64>(), flat in 0.1f64..1.0, width in 0.1f64..0.9) {
        let grid = TimeGrid::new(2.0, 64).unwrap();
        let mut r = rng(seed);
        let x = TimeSamples::from_fn(5, grid, |n, t| {
            use rand::Rng;
            Complex64::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5) / n as f64 + Complex64::new(t, 0.0)
        });
        let x = x.add(&x.map(|n, j, _| x.get(-n, j).conj())).unwrap();
        let window = Window::new(flat, flat + width).unwrap();
        let phase = PhaseData::zero(5, 0.55);
        let back = st_inverse(&st_transform(&x, &window, phase.frame(5)).unwrap());
        let expect = x.map(|_, j, c| c * window.eval(grid.time(j)));
        prop_assert!(back.max_abs_diff(&expect, 2.0).unwrap() <= 1e-12 * (1.0 + x.sup_l2()));
    }
}

fn sups() -> &'static Vec<(SymbolCase, f64)> {
    static SUPS: OnceLock<Vec<(SymbolCase, f64)>> = OnceLock::new();
    SUPS.get_or_init(|| {
        SymbolCase::ALL
            .iter()
            .filter(|c| c.dims() == 2 || !c.id().starts_with("quad"))
            .map(|&c| (c, audit_symbol(c, 0.6, 0.01, 64).unwrap().sup_ratio))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scan_supremum_dominates_every_point(idx in 0usize..10, a in -20i64..=20, b in -20i64..=20, c in -20i64..=20) {
        let table = sups();
        let (case, sup) = table[idx % table.len()];
        let coords = [a, b, c];
        if let Some(r) = symbol_ratio(case, 0.6, 0.01, &coords[..case.dims()]) {
            prop_assert!(r.is_finite() && r >= 0.0);
            prop_assert!(r <= sup * (1.0 + 1e-12), "{case} at {coords:?}: {r} > {sup}");
        }
    }
}
