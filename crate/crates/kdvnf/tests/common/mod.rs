#![allow(dead_code)]

use kdvnf::field::SpectralField;
use kdvnf::phase::{compute_phi, free_evolution, PhaseData};
use kdvnf::spacetime::{st_transform, SpaceTimeField, TimeGrid, TimeSamples, Window};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn smooth_field(n_max: usize, amp: f64, seed: u64) -> SpectralField {
    let mut r = rng(seed);
    SpectralField::random(n_max, &mut r, |n| amp * (1.0 + (n * n) as f64).powf(-1.0))
}

/// Windowed free evolution perturbed by random time-dependent noise, in the dispersion frame.
pub fn random_lattice(n_max: usize, m: usize, seed: u64, phase: &PhaseData) -> SpaceTimeField {
    let grid = TimeGrid::new(2.0, m).unwrap();
    let f = smooth_field(n_max, 1.0, seed);
    let mut r = rng(seed ^ 0xabc);
    let free = free_evolution(&f, phase, grid, &Window::flat_everywhere());
    let noise = TimeSamples::from_fn(n_max, grid, |n, t| {
        let a: f64 = r.gen::<f64>() - 0.5;
        let b: f64 = r.gen::<f64>() - 0.5;
        Complex64::new(a, b) * 0.3 / (n * n) as f64 * (3.0 * t).cos()
    });
    st_transform(&free.add(&noise).unwrap(), &Window::default().dilated(2.0), phase.frame(n_max)).unwrap()
}

pub fn phase_for(n_max: usize, s: f64, seed: u64) -> PhaseData {
    compute_phi(&smooth_field(n_max, 0.5, seed), s)
}

pub fn rel(a: f64, b: f64) -> f64 {
    a / b.max(1e-300)
}
