//! The equation for `v = u - T^l(u, u)`.
//!
//! Along solutions of `u_t + u_xxx = N(u, u)` the remainder `v` obeys
//!
//! ```text
//! (d_t - i n^3) v_n = -(2/3) R(v)_n + NR_n,
//! NR = N^h(u, u) - (2/3) M(u, u, u) + (2/3) R^h(u, u, u) - (2/3) [R(u) - R(v)],
//! ```
//!
//! with `R(v)_n = i c_n |v_n|^2 v_n` and `c_n = <n>^{2s} / n`. Since
//! `d_t |v_n|^2 = 2 Re[conj(v_n) NR_n]`, writing `v(0) = f + w(0)` turns the
//! cubic resonance into the rotation `-i phi_n v_n` plus a term without
//! derivative loss:
//!
//! ```text
//! (d_t - i L_n) v_n = -(4/3) i c_n v_n (k_n(t) + Re[conj(f_n) w_n(0)] + |w_n(0)|^2 / 2) + NR_n,
//! k_n(t) = int_0^t Re[conj(v_n) NR_n].
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{bessel_weight, SpectralField};
use crate::multipliers::{n_h, resonant_r, resonant_r_linear_in_w, resonant_r_quadratic_in_w, t_ell, trilinear_m, ChiSpec};
use crate::phase::{free_evolution, PhaseData};
use crate::quad::cumulative;
use crate::spacetime::{st_inverse, st_transform, SpaceTimeField, TimeSamples, Window};

/// Weight of `M`, `R^h` and `R(u) - R(v)` in `NR`, and of `R(v)` in the `v` equation.
pub const RESONANT_WEIGHT: f64 = 2.0 / 3.0;

/// Cutoffs of the Duhamel formula `eta_out(t) W_t [v0 + int_0^t eta_in(s) W_{-s} F(s) ds]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuhamelCutoffs {
    pub outer: Window,
    pub inner: Window,
}

impl DuhamelCutoffs {
    /// `eta(2t)` inside and out: flat on `|t| <= 1/4`.
    pub fn standard() -> Self {
        let w = Window::default().dilated(0.5);
        Self { outer: w, inner: w }
    }

    /// Windows proportional to the lattice half-width: `eta_out` flat on `|t| <= 5 T_w / 8`
    /// and `eta_in` flat on `|t| <= T_w / 2`, both vanishing before `T_w`.
    pub fn scaled(t_w: f64) -> Self {
        Self {
            outer: Window { flat: 0.625 * t_w, support: 0.9375 * t_w },
            inner: Window { flat: 0.5 * t_w, support: 0.75 * t_w },
        }
    }
}

impl Default for DuhamelCutoffs {
    fn default() -> Self {
        Self::scaled(2.0)
    }
}

/// Frequency factor in front of the resonant correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Prefactor {
    /// `<n>^{2s} / n`.
    #[default]
    Derived,
    /// `<n>^{2s-1} / n`.
    Printed,
}

impl Prefactor {
    pub fn coeff(self, n: i64, s: f64) -> f64 {
        let power = match self {
            Prefactor::Derived => 2.0 * s,
            Prefactor::Printed => 2.0 * s - 1.0,
        };
        bessel_weight(n, power) / n as f64
    }
}

fn to_field(x: &TimeSamples, frame: Vec<f64>) -> SpaceTimeField {
    st_transform(x, &Window::flat_everywhere(), frame).expect("frame matches the samples")
}

/// `window(t) x(t)`.
pub fn windowed(x: &SpaceTimeField, window: &Window) -> SpaceTimeField {
    to_field(&st_inverse(x).windowed(window), x.frame().to_vec())
}

/// `u = r + h + w` with `r` the windowed free evolution of `f` and `h = T^l(u, u)`.
#[derive(Debug, Clone)]
pub struct StateDecomposition {
    pub u: SpaceTimeField,
    pub r: SpaceTimeField,
    pub h: SpaceTimeField,
    pub w: SpaceTimeField,
    pub v: SpaceTimeField,
    pub f: SpectralField,
    pub phase: PhaseData,
}

impl StateDecomposition {
    /// `h(0)`.
    pub fn h0(&self) -> SpectralField {
        st_inverse(&self.h).at(self.h.grid().origin())
    }

    /// `w(0) = -h(0)`, the correction carried by the initial value `v(0) = f - h(0)`.
    pub fn w0(&self) -> SpectralField {
        self.h0().scale(-1.0)
    }

    /// Relative size of `r + h + w - u` and `h + v - u`.
    pub fn reassembly_error(&self) -> f64 {
        let scale = self.u.l2_norm().max(f64::MIN_POSITIVE);
        let a = self.r.add(&self.h).and_then(|x| x.add(&self.w)).and_then(|x| x.sub(&self.u));
        let b = self.h.add(&self.v).and_then(|x| x.sub(&self.u));
        a.expect("shared lattice").l2_norm().max(b.expect("shared lattice").l2_norm()) / scale
    }
}

pub fn decompose(u: &SpaceTimeField, f: &SpectralField, s: f64, spec: &ChiSpec, window: &Window) -> Result<StateDecomposition> {
    spec.check_field(u)?;
    if f.n_max() != u.n_max() {
        return Err(Error::TruncationMismatch {
            expected: u.n_max(),
            got: f.n_max(),
        });
    }
    let h = t_ell(u, u, s, spec)?;
    let r = to_field(&free_evolution(f, &spec.phase, u.grid(), window), u.frame().to_vec());
    let v = u.sub(&h)?;
    let w = v.sub(&r)?;
    Ok(StateDecomposition {
        u: u.clone(),
        r,
        h,
        w,
        v,
        f: f.clone(),
        phase: spec.phase.clone(),
    })
}

/// The pieces of `NR`.
#[derive(Debug, Clone)]
pub struct NrBundle {
    /// `R(u) - R(v)`, expanded so every term carries a factor of `h`.
    pub nr_smooth: SpaceTimeField,
    /// `R^h(u, u, u) = R(u) - R^l(u, u, u)`.
    pub nr_rh: SpaceTimeField,
    /// `N^h(u, u)`.
    pub nr_nh: SpaceTimeField,
    /// `M(u, u, u)`.
    pub nr_m: SpaceTimeField,
}

impl NrBundle {
    pub fn total(&self) -> SpaceTimeField {
        let c = RESONANT_WEIGHT;
        self.nr_nh
            .sub(&self.nr_m.scale(c))
            .and_then(|x| x.add(&self.nr_rh.scale(c)))
            .and_then(|x| x.sub(&self.nr_smooth.scale(c)))
            .expect("bundle shares a lattice")
    }
}

/// `R(v + h) - R(v)` at every time sample.
pub fn resonant_difference(v: &TimeSamples, h: &TimeSamples, s: f64) -> Result<TimeSamples> {
    let grid = v.grid();
    let fields = (0..grid.m)
        .map(|j| {
            let (vj, hj) = (v.at(j), h.at(j));
            resonant_r_linear_in_w(&vj, &hj, s)
                .add(&resonant_r_quadratic_in_w(&vj, &hj, s))
                .and_then(|x| x.add(&resonant_r(&hj, &hj, &hj, s)?))
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSamples::from_fields(grid, &fields)
}

pub fn assemble_nr(dec: &StateDecomposition, s: f64, spec: &ChiSpec) -> Result<NrBundle> {
    let u = &dec.u;
    let split = trilinear_m(u, u, u, s, spec)?;
    let smooth = resonant_difference(&st_inverse(&dec.v), &st_inverse(&dec.h), s)?;
    Ok(NrBundle {
        nr_smooth: to_field(&smooth, u.frame().to_vec()),
        nr_rh: split.r_h.expect("three equal arguments"),
        nr_nh: n_h(u, u, s, spec)?,
        nr_m: split.m,
    })
}

fn check_pair(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<()> {
    if a.n_max() != b.n_max() || a.grid() != b.grid() {
        return Err(Error::GridMismatch(format!(
            "N = {} on M = {} against N = {} on M = {}",
            a.n_max(),
            a.grid().m,
            b.n_max(),
            b.grid().m
        )));
    }
    Ok(())
}

/// `k_n(t) = int_0^t Re[conj(v_n) K_n]`, stored as a real-valued series per mode.
pub fn k_integral(v: &SpaceTimeField, k: &SpaceTimeField) -> Result<TimeSamples> {
    check_pair(v, k)?;
    Ok(k_integral_samples(&st_inverse(v), &st_inverse(k)))
}

pub(crate) fn k_integral_samples(v: &TimeSamples, k: &TimeSamples) -> TimeSamples {
    let grid = v.grid();
    let mut out = TimeSamples::zeros(v.n_max(), grid);
    for n in 1..=v.n_max() as i64 {
        let integrand: Vec<Complex64> = v
            .mode(n)
            .iter()
            .zip(k.mode(n))
            .map(|(a, b)| Complex64::new((a.conj() * b).re, 0.0))
            .collect();
        let acc: Vec<Complex64> = cumulative(&integrand, grid.origin(), grid.dt())
            .into_iter()
            .map(|c| Complex64::new(c.re, 0.0))
            .collect();
        out.mode_mut(-n).copy_from_slice(&acc);
        out.mode_mut(n).copy_from_slice(&acc);
    }
    out
}

/// Right side of the `v` equation for the decomposition and its `NR`.
pub fn vn_rhs(dec: &StateDecomposition, nr: &NrBundle, s: f64, prefactor: Prefactor) -> Result<SpaceTimeField> {
    let total = nr.total();
    let (v, nrs) = (st_inverse(&dec.v), st_inverse(&total));
    let k = k_integral_samples(&v, &nrs);
    let (f, w0) = (&dec.f, dec.w0());
    let scale = -2.0 * RESONANT_WEIGHT;
    let rhs = nrs.map(|n, j, c| {
        let p0 = (f.get(n).conj() * w0.get(n)).re + 0.5 * w0.get(n).norm_sqr();
        let p = k.get(n, j).re + p0;
        c + Complex64::new(0.0, scale * prefactor.coeff(n, s) * p) * v.get(n, j)
    });
    Ok(to_field(&rhs, dec.v.frame().to_vec()))
}

/// `eta_out(t) e^{i L t} [v0 + int_0^t eta_in(s) e^{-i L s} F(s) ds]`, mode by mode.
///
/// The integral is taken in the frame rotating with `e^{i L_n t}` by fourth-order
/// cumulative quadrature, so it is exact for `F_n(t) = p(t) e^{i L_n t}` with `p`
/// a cubic. The result is expressed in the frame `L_n`.
pub fn duhamel(rhs: &SpaceTimeField, v0: &SpectralField, phase: &PhaseData, cutoffs: &DuhamelCutoffs) -> Result<SpaceTimeField> {
    if v0.n_max() != rhs.n_max() {
        return Err(Error::GridMismatch(format!("initial value at N = {} for a right side at N = {}", v0.n_max(), rhs.n_max())));
    }
    if phase.n_max() != rhs.n_max() {
        return Err(Error::PhaseMismatch(format!("phase at N = {} for a right side at N = {}", phase.n_max(), rhs.n_max())));
    }
    let x = st_inverse(rhs);
    Ok(to_field(&duhamel_samples(&x, v0, phase, cutoffs), phase.frame(rhs.n_max())))
}

pub(crate) fn duhamel_samples(x: &TimeSamples, v0: &SpectralField, phase: &PhaseData, cutoffs: &DuhamelCutoffs) -> TimeSamples {
    let grid = x.grid();
    let times = grid.times();
    let inner: Vec<f64> = times.iter().map(|&t| cutoffs.inner.eval(t)).collect();
    let outer: Vec<f64> = times.iter().map(|&t| cutoffs.outer.eval(t)).collect();
    let mut out = TimeSamples::zeros(x.n_max(), grid);
    for n in 1..=x.n_max() as i64 {
        let omega = phase.dispersion_ext(n);
        let integrand: Vec<Complex64> = x
            .mode(n)
            .iter()
            .zip(&times)
            .zip(&inner)
            .map(|((c, &t), &e)| c * Complex64::from_polar(e, -omega * t))
            .collect();
        let acc = cumulative(&integrand, grid.origin(), grid.dt());
        let row: Vec<Complex64> = acc
            .iter()
            .zip(&times)
            .zip(&outer)
            .map(|((g, &t), &e)| (v0.get(n) + g) * Complex64::from_polar(e, omega * t))
            .collect();
        out.mode_mut(-n).iter_mut().zip(&row).for_each(|(o, c)| *o = c.conj());
        out.mode_mut(n).copy_from_slice(&row);
    }
    out
}

/// Largest `|(d_t - i L_n) v_n - F_n|` over `|t| <= t_max`, by fourth-order central differences.
pub fn duhamel_residual(v: &SpaceTimeField, rhs: &SpaceTimeField, phase: &PhaseData, t_max: f64) -> Result<f64> {
    check_pair(v, rhs)?;
    let (x, g) = (st_inverse(v), st_inverse(rhs));
    let grid = x.grid();
    let dt = grid.dt();
    let mut worst = 0.0f64;
    for n in 1..=x.n_max() as i64 {
        let (a, b) = (x.mode(n), g.mode(n));
        let omega = phase.dispersion_ext(n);
        for j in 2..grid.m - 2 {
            if grid.time(j).abs() > t_max {
                continue;
            }
            // differentiate in the rotating frame, where the series is slow
            let y = |i: usize| a[i] * Complex64::from_polar(1.0, -omega * grid.time(i));
            let d = (y(j - 2) - 8.0 * y(j - 1) + 8.0 * y(j + 1) - y(j + 2)) / (12.0 * dt);
            worst = worst.max((d * Complex64::from_polar(1.0, omega * grid.time(j)) - b[j]).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub cutoffs: DuhamelCutoffs,
    /// Smallness threshold on `||f||_{L^2}`.
    pub delta: f64,
    pub prefactor: Prefactor,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            cutoffs: DuhamelCutoffs::default(),
            delta: 1e-3,
            prefactor: Prefactor::Derived,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GammaImage {
    pub gamma1: SpaceTimeField,
    pub gamma2: SpaceTimeField,
    /// `SmallnessViolated` when `||f||` exceeds the configured threshold; the map is still evaluated.
    pub warning: Option<Error>,
}

/// `Gamma(phi1, phi2) = (T^l(phi1, phi1) + Gamma_2, Gamma_2)`, where `Gamma_2` solves the `v`
/// equation built from `phi1` with initial value `f - T^l(phi1, phi1)(0)`.
/// Both components depend on `phi1` only; `phi2` is checked for compatibility.
pub fn gamma_map(
    phi1: &SpaceTimeField,
    phi2: &SpaceTimeField,
    f: &SpectralField,
    s: f64,
    spec: &ChiSpec,
    config: &GammaConfig,
) -> Result<GammaImage> {
    check_pair(phi1, phi2)?;
    let norm = f.l2_norm();
    // relative slack so data scaled to exactly delta does not warn on rounding
    let warning = (norm > config.delta * (1.0 + 1e-12)).then_some(Error::SmallnessViolated { norm, delta: config.delta });
    let dec = decompose(phi1, f, s, spec, &config.cutoffs.outer)?;
    let nr = assemble_nr(&dec, s, spec)?;
    let rhs = vn_rhs(&dec, &nr, s, config.prefactor)?;
    let v0 = f.sub(&dec.h0())?;
    let gamma2 = duhamel(&rhs, &v0, &spec.phase, &config.cutoffs)?.reframed(phi1.frame().to_vec());
    let gamma1 = windowed(&dec.h, &config.cutoffs.outer).add(&gamma2)?;
    Ok(GammaImage { gamma1, gamma2, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::ChiMode;
    use crate::phase::compute_phi;
    use crate::spacetime::TimeGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n_max: usize, amp: f64, seed: u64) -> (SpectralField, ChiSpec, SpaceTimeField) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = SpectralField::random(n_max, &mut rng, |n| amp * (1.0 + (n * n) as f64).powf(-2.0));
        let phase = compute_phi(&f, 0.55);
        let grid = TimeGrid::new(2.0, 128).unwrap();
        let window = DuhamelCutoffs::default().outer;
        let u = to_field(&free_evolution(&f, &phase, grid, &window), phase.frame(n_max));
        (f, ChiSpec::new(phase), u)
    }

    #[test]
    fn decomposition_closes() {
        let (f, spec, u) = setup(8, 0.3, 1);
        let dec = decompose(&u, &f, 0.55, &spec, &DuhamelCutoffs::default().outer).unwrap();
        assert!(dec.reassembly_error() < 1e-14);
        assert!(dec.w.add(&dec.h).unwrap().l2_norm() < 1e-13);
        let off = spec.clone().with_mode(ChiMode::Zero);
        let dec = decompose(&u, &f, 0.55, &off, &DuhamelCutoffs::default().outer).unwrap();
        assert_eq!(dec.h.l2_norm(), 0.0);
        assert!(dec.w.l2_norm() < 1e-14);
    }

    #[test]
    fn smooth_remainder_vanishes_without_h() {
        let (f, spec, u) = setup(6, 0.3, 2);
        let off = spec.clone().with_mode(ChiMode::Zero);
        let dec = decompose(&u, &f, 0.55, &off, &DuhamelCutoffs::default().outer).unwrap();
        let nr = assemble_nr(&dec, 0.55, &off).unwrap();
        assert_eq!(nr.nr_smooth.l2_norm(), 0.0);
        let one = spec.with_mode(ChiMode::One);
        let dec = decompose(&u, &f, 0.55, &one, &DuhamelCutoffs::default().outer).unwrap();
        let nr = assemble_nr(&dec, 0.55, &one).unwrap();
        assert!(nr.nr_rh.l2_norm() < 1e-14 * (1.0 + nr.nr_m.l2_norm()));
        assert!(nr.nr_nh.l2_norm() < 1e-14);
    }

    #[test]
    fn duhamel_of_constant_forcing() {
        let phase = compute_phi(&SpectralField::zeros(3), 0.5);
        let grid = TimeGrid::new(2.0, 256).unwrap();
        let c = Complex64::new(0.2, -0.1);
        let rhs = TimeSamples::from_fn(3, grid, |n, _| if n == 1 { c } else { Complex64::new(0.0, 0.0) });
        let cut = DuhamelCutoffs::default();
        let v = duhamel_samples(&rhs, &SpectralField::zeros(3), &phase, &cut);
        for j in 0..grid.m {
            let t = grid.time(j);
            if t.abs() > 0.5 {
                continue;
            }
            let exact = c * (Complex64::from_polar(1.0, t) - 1.0) / Complex64::i();
            assert!((v.get(1, j) - exact * cut.outer.eval(t)).norm() < 1e-9);
        }
    }
}
