mod common;

use common::*;
use kdvnf::field::SpectralField;
use kdvnf::multipliers::{ChiMode, ChiSpec};
use kdvnf::phase::{compute_phi, compute_phi_with, DEFAULT_PHI_CONST};
use kdvnf::solvers::{identity_defect, picard_solve, reference_solve, PicardConfig};
use kdvnf::spacetime::{st_inverse, TimeGrid};
use rand::Rng;

fn smooth_data(n_max: usize, norm: f64, seed: u64) -> SpectralField {
    let mut r = rng(seed);
    let f = SpectralField::from_positive(n_max, |n| {
        let a: f64 = r.gen::<f64>() * std::f64::consts::TAU;
        num_complex::Complex64::from_polar((1.0 + (n * n) as f64).powf(-4.0), a)
    });
    f.scale(norm / f.l2_norm())
}

struct Run {
    error: f64,
    ratios: Vec<f64>,
    defect: f64,
}

fn run(n_max: usize, t_w: f64, m: usize, amp: f64, mode: ChiMode) -> Run {
    let s = 0.55;
    let f = smooth_data(n_max, amp, 5);
    let spec = ChiSpec::new(compute_phi(&f, s)).with_mode(mode);
    let grid = TimeGrid::new(t_w, m).unwrap();
    let config = PicardConfig::new(grid);
    let out = picard_solve(&f, s, &spec, 1e-15, 30, &config).unwrap();
    let traj = reference_solve(&f, s, t_w, grid.dt() / 8.0).unwrap();
    Run {
        error: st_inverse(&out.u).max_abs_diff(&traj.sampled(grid).unwrap(), 0.4).unwrap(),
        ratios: out.ratios(),
        defect: identity_defect(&out, s, &spec, &config.gamma.cutoffs.outer, 0.5).unwrap(),
    }
}

#[test]
fn fixed_point_matches_reference_and_refines() {
    let runs: Vec<Run> = [(16, 512), (32, 1024), (64, 2048)]
        .iter()
        .map(|&(n, m)| run(n, 8.0, m, 1e-3, ChiMode::Restricted))
        .collect();
    for r in &runs {
        assert!(r.ratios.iter().all(|&x| x <= 0.5), "{:?}", r.ratios);
        assert!(r.error <= 1e-6 && r.defect < 1e-16);
    }
    assert!(runs[0].error > runs[1].error && runs[1].error > runs[2].error);
}

#[test]
fn unrestricted_normal_form_is_exact_on_short_lattice() {
    // with chi = 1 the transformation is local in time and nothing leaks in from the window edges
    let r = run(16, 2.0, 256, 1e-3, ChiMode::One);
    assert!(r.error < 1e-14, "{}", r.error);
    let restricted = run(16, 2.0, 256, 1e-3, ChiMode::Restricted);
    assert!(restricted.error < 1e-8);
}

#[test]
fn contraction_improves_as_data_shrinks() {
    let worst = |amp| run(8, 2.0, 128, amp, ChiMode::Restricted).ratios.iter().cloned().fold(0.0, f64::max);
    let (a, b) = (worst(4e-3), worst(1e-3));
    assert!(b < a && a < 0.5, "{a} {b}");
}

#[test]
fn flipping_the_phase_sign_breaks_agreement() {
    let s = 0.55;
    let f = smooth_data(16, 1e-2, 5);
    let grid = TimeGrid::new(2.0, 256).unwrap();
    let traj = reference_solve(&f, s, 2.0, grid.dt() / 8.0).unwrap().sampled(grid).unwrap();
    let err = |c: f64| {
        let spec = ChiSpec::new(compute_phi_with(&f, s, c)).with_mode(ChiMode::One);
        let out = picard_solve(&f, s, &spec, 1e-15, 30, &PicardConfig::new(grid)).unwrap();
        st_inverse(&out.u).max_abs_diff(&traj, 0.4).unwrap()
    };
    let (good, bad) = (err(DEFAULT_PHI_CONST), err(-DEFAULT_PHI_CONST));
    assert!(bad > 100.0 * good, "{good} {bad}");
}
