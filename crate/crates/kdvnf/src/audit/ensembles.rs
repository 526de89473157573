//! Empirical constants of the linear estimates over random ensembles.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{bessel_weight, SpectralField};
use crate::norms::{norm_x, norm_z, norm_zstar};
use crate::phase::{free_evolution, PhaseData};
use crate::spacetime::{st_inverse, st_transform, SpaceTimeField, TimeGrid, TimeSamples, Window};
use crate::system::{duhamel, k_integral, DuhamelCutoffs};

/// Summary of a sample of ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDistribution {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Ensemble index of the maximum.
    pub argmax: usize,
}

impl RatioDistribution {
    pub fn from_ratios(ratios: &[f64]) -> Result<Self> {
        if ratios.is_empty() || ratios.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("ratios must be a nonempty list of finite numbers".into()));
        }
        let mut sorted = ratios.to_vec();
        sorted.sort_by(f64::total_cmp);
        let argmax = ratios
            .iter()
            .enumerate()
            .fold(0, |best, (i, r)| if *r > ratios[best] { i } else { best });
        Ok(Self {
            count: ratios.len(),
            min: sorted[0],
            median: sorted[sorted.len() / 2],
            max: sorted[sorted.len() - 1],
            argmax,
        })
    }
}

/// Windowed sums of a few plane waves per mode at random modulations.
///
/// Member `i` has spatial decay `<n>^{-a}` and modulation decay `<lambda>^{-b}`
/// with `a, b` drawn per member, so the ensemble mixes smooth and rough forcings.
pub fn random_forcing_ensemble(n_max: usize, grid: TimeGrid, phase: &PhaseData, count: usize, seed: u64) -> Vec<SpaceTimeField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = Window::default().dilated(0.75 * grid.t_w);
    let kmax = (grid.m / 2) as i64 - 1;
    (0..count)
        .map(|_| {
            let a: f64 = rng.gen_range(0.0..1.5);
            let b: f64 = rng.gen_range(0.0..1.0);
            let waves: Vec<Vec<(f64, Complex64)>> = (1..=n_max as i64)
                .map(|n| {
                    (0..3)
                        .map(|_| {
                            let k = rng.gen_range(-kmax..=kmax) as f64;
                            let lambda = k * std::f64::consts::PI / grid.t_w;
                            let amp = bessel_weight(n, -a) * (1.0 + lambda * lambda).powf(-0.5 * b);
                            let c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * amp;
                            (phase.dispersion_ext(n) + lambda, c)
                        })
                        .collect()
                })
                .collect();
            let samples = TimeSamples::from_fn(n_max, grid, |n, t| {
                waves[n as usize - 1].iter().map(|(w, c)| c * Complex64::from_polar(window.eval(t), w * t)).sum()
            });
            st_transform(&samples, &Window::flat_everywhere(), phase.frame(n_max)).expect("frame sized to the samples")
        })
        .collect()
}

/// `||eta int_0^t W_{t-s} F ds||_Z / ||F||_{Z*}` over an ensemble of forcings.
pub fn verify_duhamel_bound(ensemble: &[SpaceTimeField], phase: &PhaseData, eps: f64, cutoffs: &DuhamelCutoffs) -> Result<RatioDistribution> {
    let ratios = ensemble
        .iter()
        .map(|f| {
            let zero = SpectralField::zeros(f.n_max());
            let out = duhamel(f, &zero, phase, cutoffs)?;
            Ok(norm_z(&out, phase, eps)? / norm_zstar(f, phase, eps)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    RatioDistribution::from_ratios(&ratios)
}

/// `<n>^{2s-1+eps} v_n k_n` with `k_n(t) = int_0^t Re[conj(v_n) K_n]`.
pub fn vkn_term(v: &SpaceTimeField, k: &SpaceTimeField, s: f64, eps: f64) -> Result<SpaceTimeField> {
    let kn = k_integral(v, k)?;
    let vs = st_inverse(v);
    let prod = vs.map(|n, j, c| c * kn.get(n, j).re * bessel_weight(n, 2.0 * s - 1.0 + eps));
    st_transform(&prod, &Window::flat_everywhere(), v.frame().to_vec())
}

/// Pairs `(v, K)`: `v` a windowed free evolution plus a random forcing, `K` a random forcing.
pub fn random_vkn_ensemble(n_max: usize, grid: TimeGrid, phase: &PhaseData, count: usize, seed: u64) -> Vec<(SpaceTimeField, SpaceTimeField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let window = Window::default().dilated(0.75 * grid.t_w);
    let vs = random_forcing_ensemble(n_max, grid, phase, count, seed);
    let ks = random_forcing_ensemble(n_max, grid, phase, count, seed.wrapping_add(1));
    vs.into_iter()
        .zip(ks)
        .map(|(pert, k)| {
            let p: f64 = rng.gen_range(0.5..2.0);
            let f = SpectralField::random(n_max, &mut rng, |n| bessel_weight(n, -p));
            let free = st_transform(&free_evolution(&f, phase, grid, &window), &Window::flat_everywhere(), phase.frame(n_max))
                .expect("frame sized to the samples");
            (free.add(&pert.scale(0.1)).expect("same lattice"), k)
        })
        .collect()
}

/// `||F^{-1}[<n>^{2s-1+} v_n k_n]||_{Z*} / (||v||_Z^2 ||K||_X)` over an ensemble.
pub fn verify_vkn(ensemble: &[(SpaceTimeField, SpaceTimeField)], phase: &PhaseData, s: f64, eps: f64) -> Result<RatioDistribution> {
    let ratios = ensemble
        .iter()
        .map(|(v, k)| {
            let num = norm_zstar(&vkn_term(v, k, s, eps)?, phase, eps)?;
            let den = norm_z(v, phase, eps)?.powi(2) * norm_x(k, phase, s, eps)?;
            if den == 0.0 {
                return Err(Error::DivisionByZeroNorm);
            }
            Ok(num / den)
        })
        .collect::<Result<Vec<f64>>>()?;
    RatioDistribution::from_ratios(&ratios)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_summary() {
        let d = RatioDistribution::from_ratios(&[3.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!((d.min, d.median, d.max, d.argmax), (1.0, 3.0, 3.0, 0));
        assert!(RatioDistribution::from_ratios(&[]).is_err());
    }

    #[test]
    fn ensembles_are_reproducible() {
        let grid = TimeGrid::new(2.0, 32).unwrap();
        let phase = PhaseData::zero(4, 0.55);
        let a = random_forcing_ensemble(4, grid, &phase, 3, 7);
        let b = random_forcing_ensemble(4, grid, &phase, 3, 7);
        assert_eq!(a, b);
        assert!(a[0].max_asymmetry() < 1e-12);
    }

    #[test]
    fn zero_k_gives_zero_term() {
        let grid = TimeGrid::new(2.0, 32).unwrap();
        let phase = PhaseData::zero(4, 0.55);
        let (v, k) = random_vkn_ensemble(4, grid, &phase, 1, 3).remove(0);
        let out = vkn_term(&v, &k.scale(0.0), 0.55, 0.01).unwrap();
        assert_eq!(out.l2_norm(), 0.0);
    }

    #[test]
    fn constant_single_mode_k_integral() {
        // v_1 = a, K_1 = b constant in time: k_1(t) = Re[conj(a) b] t.
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let (a, b) = (Complex64::new(0.3, 0.4), Complex64::new(-1.0, 2.0));
        let field = |c: Complex64| {
            let x = TimeSamples::from_fn(1, grid, |_, _| c);
            st_transform(&x, &Window::flat_everywhere(), vec![0.0, 0.0]).unwrap()
        };
        let kn = k_integral(&field(a), &field(b)).unwrap();
        for j in 0..grid.m {
            assert!((kn.get(1, j).re - (a.conj() * b).re * grid.time(j)).abs() < 1e-13);
        }
    }
}
