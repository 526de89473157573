//! Data-dependent phase, modified dispersion and the frozen resonant propagator.
//!
//! The resonant self-interaction of a mode, `i <n>^{2s} |u_n|^2 u_n / n`, enters
//! the equation for the normal-form remainder with weight `-2/3`. Freezing
//! `|u_n|` at its initial value turns it into the linear rotation
//! `-i phi_n u_n`, so the propagator is `e^{i L_n t}` with `L_n = n^3 - phi_n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{bessel_weight, modes, slot, SpectralField};
use crate::spacetime::{TimeGrid, TimeSamples, Window};

/// Coefficient of `<n>^{2s} |f_n|^2 / n` in `phi_n`.
pub const DEFAULT_PHI_CONST: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseData {
    pub s: f64,
    pub phi_const: f64,
    pub f_norm: f64,
    n_max: usize,
    phi: Vec<f64>,
}

impl PhaseData {
    /// Phase of the zero datum: plain Airy dispersion.
    pub fn zero(n_max: usize, s: f64) -> Self {
        Self {
            s,
            phi_const: DEFAULT_PHI_CONST,
            f_norm: 0.0,
            n_max,
            phi: vec![0.0; 2 * n_max],
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `phi_n`, zero outside the represented range.
    #[inline]
    pub fn phi(&self, n: i64) -> f64 {
        if n == 0 || n.unsigned_abs() as usize > self.n_max {
            0.0
        } else {
            self.phi[slot(n, self.n_max)]
        }
    }

    /// `L_n = n^3 - phi_n` for any `n`, with `phi_n = 0` beyond the data's truncation.
    #[inline]
    pub fn dispersion_ext(&self, n: i64) -> f64 {
        (n * n * n) as f64 - self.phi(n)
    }

    /// Frame vector `L_n` for a field truncated at `n_max`.
    pub fn frame(&self, n_max: usize) -> Vec<f64> {
        modes(n_max).map(|n| self.dispersion_ext(n)).collect()
    }

    /// Largest `|phi_n| / <n>`.
    pub fn max_relative_phi(&self) -> f64 {
        modes(self.n_max)
            .map(|n| self.phi(n).abs() / bessel_weight(n, 1.0))
            .fold(0.0, f64::max)
    }
}

/// `phi_n = (2/3) <n>^{2s} |f_n|^2 / n`.
pub fn compute_phi(f: &SpectralField, s: f64) -> PhaseData {
    compute_phi_with(f, s, DEFAULT_PHI_CONST)
}

pub fn compute_phi_with(f: &SpectralField, s: f64, phi_const: f64) -> PhaseData {
    let phi = f
        .modes()
        .map(|n| phi_const * bessel_weight(n, 2.0 * s) * f.get(n).norm_sqr() / n as f64)
        .collect();
    PhaseData {
        s,
        phi_const,
        f_norm: f.l2_norm(),
        n_max: f.n_max(),
        phi,
    }
}

pub fn dispersion(n: i64, phase: &PhaseData) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroFrequency);
    }
    Ok(phase.dispersion_ext(n))
}

/// `W_t f`: multiplies mode `n` by `e^{i L_n t}`.
pub fn propagate(f: &SpectralField, phase: &PhaseData, t: f64) -> SpectralField {
    SpectralField::from_positive(f.n_max(), |n| f.get(n) * Complex64::from_polar(1.0, phase.dispersion_ext(n) * t))
}

/// Samples of `window(t) W_t f` on a time grid.
pub fn free_evolution(f: &SpectralField, phase: &PhaseData, grid: TimeGrid, window: &Window) -> TimeSamples {
    TimeSamples::from_fn(f.n_max(), grid, |n, t| {
        f.get(n) * Complex64::from_polar(window.eval(t), phase.dispersion_ext(n) * t)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phase_of_unit_mode() {
        let f = SpectralField::from_positive(1, |_| Complex64::new(1.0, 0.0));
        let p = compute_phi(&f, 0.5);
        assert!((p.phi(1) - 0.9428090).abs() < 1e-7);
        assert_eq!(p.phi(-1), -p.phi(1));
        assert!((dispersion(1, &p).unwrap() - 0.0571910).abs() < 1e-7);
        assert_eq!(dispersion(0, &p), Err(Error::ZeroFrequency));
        assert_eq!(dispersion(2, &PhaseData::zero(2, 0.5)).unwrap(), 8.0);
    }

    #[test]
    fn zero_data_has_zero_phase() {
        let p = compute_phi(&SpectralField::zeros(4), 0.6);
        assert!(p.phi.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn propagator_is_unitary_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = SpectralField::random(16, &mut rng, |n| 1.0 / n as f64);
        let p = compute_phi(&f, 0.55);
        let a = propagate(&propagate(&f, &p, 0.3), &p, 0.45);
        let b = propagate(&f, &p, 0.75);
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-12);
        assert!((b.l2_norm() - f.l2_norm()).abs() < 1e-12);
        assert!(b.max_asymmetry() < 1e-12);
        assert_eq!(propagate(&f, &p, 0.0), f);
    }

    #[test]
    fn propagator_solves_linear_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = SpectralField::random(4, &mut rng, |_| 1.0);
        let p = compute_phi(&f, 0.5);
        let residual = |h: f64| {
            let d = propagate(&f, &p, h).sub(&propagate(&f, &p, -h)).unwrap().scale(0.5 / h);
            f.modes()
                .map(|n| (d.get(n) - Complex64::i() * p.dispersion_ext(n) * f.get(n)).norm())
                .fold(0.0, f64::max)
        };
        let (r1, r2) = (residual(1e-3), residual(5e-4));
        assert!(r1 / r2 > 3.9 && r1 / r2 < 4.1);
    }
}
