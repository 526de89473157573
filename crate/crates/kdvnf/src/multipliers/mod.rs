//! Fourier multiplier operators: the quadratic nonlinearity `N`, the normal
//! form `T`, the modulation cutoff `chi`, their low/high splits, and the
//! trilinear resonant and nonresonant pieces `R` and `M`.
//!
//! Symbols, with `<n> = (1 + n^2)^{1/2}` and `n = n1 + n2`:
//!
//! * `sigma_N(n1, n2) = i n <n1>^s <n2>^s / <n>^s`
//! * `sigma_T(n1, n2) = -<n1>^s <n2>^s / (3 <n>^s n1 n2)`
//!
//! The sign of `sigma_T` is the one for which
//! `(d_t + d_x^3) T(u, u) = 2 T(N(u, u), u) + N(u, u)` holds along solutions of
//! `u_t + u_xxx = N(u, u)`, since `n^3 - n1^3 - n2^3 = 3 n n1 n2`.

mod engine;
pub mod fixed;
mod trilinear;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::bessel_weight;
use crate::phase::PhaseData;
use crate::spacetime::{smooth_step, SpaceTimeField};

pub use engine::Part;
pub use trilinear::{
    nonlinearity_full, resonant_r, resonant_r_field, resonant_r_linear_in_w, resonant_r_oracle,
    resonant_r_quadratic_in_w, three_t_ell_of, trilinear_m, TrilinearSplit,
};

pub(crate) use engine::{bilinear_samples, BilinearPlan, Prepared};

/// `i n <n1>^s <n2>^s / <n>^s`.
#[inline]
pub fn symbol_n(n1: i64, n2: i64, s: f64) -> Complex64 {
    let n = n1 + n2;
    Complex64::new(0.0, n as f64 * bessel_weight(n1, s) * bessel_weight(n2, s) / bessel_weight(n, s))
}

/// `-<n1>^s <n2>^s / (3 <n>^s n1 n2)`; zero on the excluded set `n1 n2 n = 0`.
#[inline]
pub fn symbol_t(n1: i64, n2: i64, s: f64) -> f64 {
    let n = n1 + n2;
    if n1 == 0 || n2 == 0 || n == 0 {
        return 0.0;
    }
    -bessel_weight(n1, s) * bessel_weight(n2, s) / (3.0 * bessel_weight(n, s) * (n1 * n2) as f64)
}

/// `3 (n1 + n2) n1 n2 = (n1 + n2)^3 - n1^3 - n2^3`.
pub fn h2(n1: i64, n2: i64) -> i64 {
    3 * (n1 + n2) * n1 * n2
}

/// `(n1 + n2)(n2 + n3)(n3 + n1)`.
pub fn h3(n1: i64, n2: i64, n3: i64) -> i64 {
    (n1 + n2) * (n2 + n3) * (n3 + n1)
}

/// `(n1 + n2 + n3 + n4)^3 - n1^3 - n2^3 - n3^3 - n4^3`.
pub fn h4(n1: i64, n2: i64, n3: i64, n4: i64) -> i64 {
    let n = n1 + n2 + n3 + n4;
    n * n * n - n1 * n1 * n1 - n2 * n2 * n2 - n3 * n3 * n3 - n4 * n4 * n4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChiMode {
    Restricted,
    /// `chi = 1` everywhere.
    One,
    /// `chi = 0` everywhere.
    Zero,
}

/// Parameters of the modulation cutoff `chi(n, tau; k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSpec {
    pub threshold_const: f64,
    pub ramp_ratio: f64,
    pub mode: ChiMode,
    pub phase: PhaseData,
}

impl ChiSpec {
    pub fn new(phase: PhaseData) -> Self {
        Self {
            threshold_const: 3.0,
            ramp_ratio: 4.0,
            mode: ChiMode::Restricted,
            phase,
        }
    }

    pub fn with_mode(mut self, mode: ChiMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_ramp(mut self, threshold_const: f64, ramp_ratio: f64) -> Self {
        self.threshold_const = threshold_const;
        self.ramp_ratio = ramp_ratio;
        self
    }

    /// `max(c |(n + k) n k|, 1)`.
    #[inline]
    pub fn threshold(&self, n: i64, k: i64) -> f64 {
        (self.threshold_const * ((n + k) * n * k).unsigned_abs() as f64).max(1.0)
    }

    /// Cutoff value at bracketed modulation `<tau - L_n>` for the pair `(n; k)`.
    #[inline]
    pub fn weight(&self, bracket: f64, n: i64, k: i64) -> f64 {
        match self.mode {
            ChiMode::One => 1.0,
            ChiMode::Zero => 0.0,
            ChiMode::Restricted => {
                let x = bracket / self.threshold(n, k);
                if x <= 1.0 {
                    1.0
                } else if x >= self.ramp_ratio {
                    0.0
                } else {
                    smooth_step((self.ramp_ratio - x) / (self.ramp_ratio - 1.0))
                }
            }
        }
    }

    pub(crate) fn check_field(&self, u: &SpaceTimeField) -> Result<()> {
        if u.n_max() != self.phase.n_max() {
            return Err(Error::PhaseMismatch(format!(
                "field truncated at {} but phase computed at {}",
                u.n_max(),
                self.phase.n_max()
            )));
        }
        Ok(())
    }
}

/// `<x> = (1 + x^2)^{1/2}`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// `chi(n, tau; k)`, a smooth cutoff to modulations below `c |(n + k) n k|`.
pub fn chi(n: i64, tau: f64, k: i64, spec: &ChiSpec) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroFrequency);
    }
    Ok(spec.weight(bracket(tau - spec.phase.dispersion_ext(n)), n, k))
}

fn check_pair(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<()> {
    if u.n_max() != v.n_max() {
        return Err(Error::TruncationMismatch {
            expected: u.n_max(),
            got: v.n_max(),
        });
    }
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch("inputs live on different time grids".into()));
    }
    Ok(())
}

fn apply(
    u: &SpaceTimeField,
    v: &SpaceTimeField,
    symbol: &(dyn Fn(i64, i64) -> Complex64 + Sync),
    parts: (Part, Part),
    spec: Option<&ChiSpec>,
) -> Result<SpaceTimeField> {
    check_pair(u, v)?;
    if let Some(spec) = spec {
        spec.check_field(u)?;
    }
    let zero = PhaseData::zero(u.n_max(), 0.0);
    let phase = spec.map(|c| &c.phase).unwrap_or(&zero);
    let pu = Prepared::new(u, phase);
    let pv = Prepared::new(v, phase);
    let plan = BilinearPlan {
        symbol,
        parts,
        chi: spec,
        n_out: u.n_max(),
    };
    let out = bilinear_samples(&pu, &pv, &plan);
    Ok(engine::to_field(&out, u.frame().to_vec()))
}

/// `N(u, v)` with symbol `sigma_N`, truncated to the inputs' `N`.
pub fn bilinear_n(u: &SpaceTimeField, v: &SpaceTimeField, s: f64) -> Result<SpaceTimeField> {
    apply(u, v, &|a, b| symbol_n(a, b, s), (Part::All, Part::All), None)
}

/// The unrestricted normal form `T(u, v)`.
pub fn normal_form_t(u: &SpaceTimeField, v: &SpaceTimeField, s: f64) -> Result<SpaceTimeField> {
    apply(u, v, &|a, b| symbol_t(a, b, s).into(), (Part::All, Part::All), None)
}

/// `T(chi u, chi v)` with `chi(n1, tau1; n2) chi(n2, tau2; n1)` inside the sum.
pub fn t_ell(u: &SpaceTimeField, v: &SpaceTimeField, s: f64, spec: &ChiSpec) -> Result<SpaceTimeField> {
    apply(u, v, &|a, b| symbol_t(a, b, s).into(), (Part::Low, Part::Low), Some(spec))
}

pub fn t_h(u: &SpaceTimeField, v: &SpaceTimeField, s: f64, spec: &ChiSpec) -> Result<SpaceTimeField> {
    normal_form_t(u, v, s)?.sub(&t_ell(u, v, s, spec)?)
}

pub fn n_ell(u: &SpaceTimeField, v: &SpaceTimeField, s: f64, spec: &ChiSpec) -> Result<SpaceTimeField> {
    apply(u, v, &|a, b| symbol_n(a, b, s), (Part::Low, Part::Low), Some(spec))
}

pub fn n_h(u: &SpaceTimeField, v: &SpaceTimeField, s: f64, spec: &ChiSpec) -> Result<SpaceTimeField> {
    bilinear_n(u, v, s)?.sub(&n_ell(u, v, s, spec)?)
}

/// The three pieces of `T^h` in which at least one factor is high-modulation.
#[derive(Debug, Clone)]
pub struct HighSplit {
    pub hl: SpaceTimeField,
    pub lh: SpaceTimeField,
    pub hh: SpaceTimeField,
}

impl HighSplit {
    pub fn sum(&self) -> SpaceTimeField {
        self.hl.add(&self.lh).and_then(|x| x.add(&self.hh)).expect("pieces share a lattice")
    }
}

pub fn decompose_h(u: &SpaceTimeField, v: &SpaceTimeField, s: f64, spec: &ChiSpec) -> Result<HighSplit> {
    let sym = |a, b| symbol_t(a, b, s).into();
    Ok(HighSplit {
        hl: apply(u, v, &sym, (Part::High, Part::Low), Some(spec))?,
        lh: apply(u, v, &sym, (Part::Low, Part::High), Some(spec))?,
        hh: apply(u, v, &sym, (Part::High, Part::High), Some(spec))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_values() {
        let n = symbol_n(1, 1, 0.5);
        assert!(n.re.abs() < 1e-15 && (n.im - 2.0 * 2f64.sqrt() / 5f64.powf(0.25)).abs() < 1e-14 && (n.im - 1.8914832).abs() < 1e-7);
        assert!((symbol_t(1, 1, 0.5) + 2f64.sqrt() / (3.0 * 5f64.powf(0.25))).abs() < 1e-15 && (symbol_t(1, 1, 0.5) + 0.3152472).abs() < 1e-7);
        assert_eq!(symbol_t(3, -3, 0.5), 0.0);
    }

    #[test]
    fn normal_form_cancels_resonance_factor() {
        for n1 in -6i64..=6 {
            for n2 in -6i64..=6 {
                if n1 == 0 || n2 == 0 || n1 + n2 == 0 {
                    continue;
                }
                let lhs = Complex64::new(0.0, -(h2(n1, n2) as f64)) * symbol_t(n1, n2, 0.6);
                assert!((lhs - symbol_n(n1, n2, 0.6)).norm() < 1e-12);
                assert!((symbol_n(-n1, -n2, 0.6) - symbol_n(n1, n2, 0.6).conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn resonance_factors() {
        assert_eq!(h3(1, 2, 3), 60);
        assert_eq!(h4(1, 2, 3, 0), 180);
        assert_eq!(h2(1, 2), 18);
        assert_eq!(h3(5, -5, 9), 0);
        for (a, b, c, d) in [(1, 2, 3, 4), (-3, 7, 2, -5), (6, -1, -1, 9)] {
            let n = a + b + c + d;
            assert_eq!(h4(a, b, c, d), 3 * h3(a, b, c) + 3 * d * (n - d) * n);
        }
    }

    #[test]
    fn chi_examples() {
        let spec = ChiSpec::new(PhaseData::zero(4, 0.5));
        assert_eq!(chi(2, 8.0, 1, &spec).unwrap(), 1.0);
        let far = 1.0 + 100.0 * 3.0 * 6.0;
        assert_eq!(chi(2, 8.0 + far, 1, &spec).unwrap(), 0.0);
        assert_eq!(chi(3, 27.0, -3, &spec).unwrap(), 1.0);
        assert_eq!(chi(0, 0.0, 1, &spec), Err(Error::ZeroFrequency));
        let mut last = 1.0;
        for i in 0..200 {
            let w = chi(2, 8.0 + i as f64 * 0.5, 1, &spec).unwrap();
            assert!((0.0..=1.0).contains(&w) && w <= last);
            last = w;
        }
    }
}
