mod common;

use common::*;
use kdvnf::field::{apply_bessel, SpectralField};
use kdvnf::multipliers::fixed::{m_static, n_static, three_t_static};
use kdvnf::multipliers::{
    bilinear_n, decompose_h, normal_form_t, resonant_r, resonant_r_field, resonant_r_linear_in_w,
    resonant_r_oracle, resonant_r_quadratic_in_w, t_ell, three_t_ell_of, trilinear_m, ChiMode, ChiSpec,
};
use kdvnf::phase::PhaseData;
use kdvnf::spacetime::st_inverse;
use num_complex::Complex64;

#[test]
fn closed_resonant_form_matches_restricted_sum() {
    let a = smooth_field(12, 1.0, 1);
    let r = resonant_r(&a, &a, &a, 0.6).unwrap();
    let o = resonant_r_oracle(&a, &a, &a, 0.6).unwrap();
    assert!(r.sub(&o).unwrap().l2_norm() < 1e-12 * r.l2_norm());
    let b = smooth_field(12, 1.0, 2);
    let c = smooth_field(12, 1.0, 3);
    let r = resonant_r(&a, &b, &c, 0.55).unwrap();
    let o = resonant_r_oracle(&a, &b, &c, 0.55).unwrap();
    assert!(r.sub(&o).unwrap().l2_norm() < 1e-12 * r.l2_norm());
}

#[test]
fn resonant_unit_mode() {
    let u = SpectralField::from_positive(1, |_| Complex64::new(1.0, 0.0));
    let r = resonant_r(&u, &u, &u, 0.5).unwrap();
    assert!((r.get(1) - Complex64::new(0.0, 2f64.sqrt())).norm() < 1e-12);
}

#[test]
fn mixed_resonant_sums() {
    let r = smooth_field(8, 1.0, 4);
    let w = smooth_field(8, 0.1, 5);
    let lin = resonant_r_linear_in_w(&r, &w, 0.6);
    let direct = resonant_r(&r, &r, &w, 0.6).unwrap().scale(3.0);
    assert!(lin.sub(&direct).unwrap().l2_norm() < 1e-13);
    let quad = resonant_r_quadratic_in_w(&r, &w, 0.6);
    let direct = resonant_r(&w, &w, &r, 0.6).unwrap().scale(3.0);
    assert!(quad.sub(&direct).unwrap().l2_norm() < 1e-13);
    // cubic expansion: R(r + w) - R(r) = linear + quadratic + R(w)
    let v = r.add(&w).unwrap();
    let lhs = resonant_r(&v, &v, &v, 0.6).unwrap().sub(&resonant_r(&r, &r, &r, 0.6).unwrap()).unwrap();
    let rhs = lin.add(&quad).unwrap().add(&resonant_r(&w, &w, &w, 0.6).unwrap()).unwrap();
    assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-13);
    assert_eq!(resonant_r_linear_in_w(&r, &SpectralField::zeros(8), 0.6).l2_norm(), 0.0);
}

#[test]
fn static_n_matches_physical_grid() {
    let s = 0.5;
    let u = smooth_field(16, 1.0, 6);
    let n = n_static(&u, &u, s, 16);
    let bu = apply_bessel(&u, s);
    let m = 128;
    let g = bu.to_grid(m);
    let sq: Vec<f64> = g.iter().map(|x| x * x).collect();
    // Fourier coefficients of the square, then derivative and inverse weight
    let expect = SpectralField::from_positive(16, |k| {
        let c: Complex64 = sq
            .iter()
            .enumerate()
            .map(|(j, x)| x * Complex64::from_polar(1.0, -std::f64::consts::TAU * (k as f64) * j as f64 / m as f64))
            .sum::<Complex64>()
            / m as f64;
        c * Complex64::new(0.0, k as f64) / (1.0 + (k * k) as f64).powf(0.5 * s)
    });
    assert!(n.sub(&expect).unwrap().l2_norm() < 1e-10);
}

#[test]
fn unrestricted_limits_on_lattice() {
    let phase = phase_for(10, 0.55, 7);
    let u = random_lattice(10, 64, 8, &phase);
    let one = ChiSpec::new(phase.clone()).with_mode(ChiMode::One);
    let zero = ChiSpec::new(phase.clone()).with_mode(ChiMode::Zero);
    let t = normal_form_t(&u, &u, 0.55).unwrap();
    assert!(t_ell(&u, &u, 0.55, &one).unwrap().sub(&t).unwrap().l2_norm() < 1e-13 * t.l2_norm());
    assert_eq!(t_ell(&u, &u, 0.55, &zero).unwrap().l2_norm(), 0.0);
    let split = trilinear_m(&u, &u, &u, 0.55, &one).unwrap();
    let rh = split.r_h.unwrap();
    assert!(rh.l2_norm() < 1e-12 * split.r_ell.l2_norm());
}

#[test]
fn lattice_trilinear_matches_static_evaluation() {
    let phase = phase_for(8, 0.6, 9);
    let u = random_lattice(8, 32, 10, &phase);
    let one = ChiSpec::new(phase.clone()).with_mode(ChiMode::One);
    let split = trilinear_m(&u, &u, &u, 0.6, &one).unwrap();
    let full = three_t_ell_of(&u, &u, &u, 0.6, &one).unwrap();
    let (xm, xf, xu) = (st_inverse(&split.m), st_inverse(&full), st_inverse(&u));
    for j in [0usize, 7, 16, 29] {
        let uj = xu.at(j);
        let ms = m_static(&uj, &uj, &uj, 0.6);
        let ts = three_t_static(&uj, &uj, &uj, 0.6);
        assert!(xm.at(j).sub(&ms).unwrap().l2_norm() < 1e-12 * (1.0 + ms.l2_norm()));
        assert!(xf.at(j).sub(&ts).unwrap().l2_norm() < 1e-12 * (1.0 + ts.l2_norm()));
    }
}

#[test]
fn restricted_splits_close() {
    let phase = phase_for(8, 0.6, 11);
    let u = random_lattice(8, 64, 12, &phase);
    let v = random_lattice(8, 64, 13, &phase);
    let spec = ChiSpec::new(phase.clone());
    let t = normal_form_t(&u, &v, 0.6).unwrap();
    let tl = t_ell(&u, &v, 0.6, &spec).unwrap();
    let h = decompose_h(&u, &v, 0.6, &spec).unwrap();
    let gap = h.sum().sub(&t.sub(&tl).unwrap()).unwrap().l2_norm();
    assert!(gap < 1e-12 * t.l2_norm(), "gap {gap}");
    let split = trilinear_m(&u, &u, &u, 0.6, &spec).unwrap();
    let full = three_t_ell_of(&u, &u, &u, 0.6, &spec).unwrap();
    let gap = split.m.add(&split.r_ell).unwrap().sub(&full).unwrap().l2_norm();
    assert!(gap < 1e-12 * full.l2_norm(), "gap {gap}");
    assert!(split.r_h.unwrap().l2_norm() > 0.0);
    let r = resonant_r_field(&u, &u, &u, 0.6).unwrap();
    assert!(r.max_asymmetry() < 1e-10);
    assert!(bilinear_n(&u, &v, 0.6).unwrap().max_asymmetry() < 1e-10);
    let _ = PhaseData::zero(1, 0.5);
}
