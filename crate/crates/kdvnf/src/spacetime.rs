//! Time-windowed trajectories and their coefficients on the `(tau, n)` lattice.
//!
//! A [`SpaceTimeField`] stores, for each spatial mode `n`, the discrete Fourier
//! coefficients in time of `e^{-i w_n t} u_n(t)`, where `w_n` is a per-mode
//! frame frequency. The physical time frequency of lattice index `k` is
//! `tau = w_n + lambda_k` with `lambda_k = k pi / T_w`. Choosing `w_n = L_n`
//! centres free evolutions at `k = 0`, so modest `M` resolves them exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{mode_of, modes, slot, SpectralField};

/// Uniform grid `t_j = -T_w + 2 j T_w / M`, `j = 0..M`; `t = 0` sits at `j = M/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_w: f64,
    pub m: usize,
}

impl TimeGrid {
    pub fn new(t_w: f64, m: usize) -> Result<Self> {
        if !(t_w > 0.0) || m < 4 || !m.is_power_of_two() {
            return Err(Error::GridMismatch(format!(
                "need T_w > 0 and M a power of two >= 4, got T_w = {t_w}, M = {m}"
            )));
        }
        Ok(Self { t_w, m })
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.t_w / self.m as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        -self.t_w + j as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.time(j)).collect()
    }

    /// Index of `t = 0`.
    pub fn origin(&self) -> usize {
        self.m / 2
    }

    /// Signed lattice frequency index stored at `kidx`.
    pub fn k_of(&self, kidx: usize) -> i64 {
        kidx as i64 - (self.m / 2) as i64
    }

    pub fn lambda(&self, kidx: usize) -> f64 {
        self.k_of(kidx) as f64 * std::f64::consts::PI / self.t_w
    }

    fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Smooth step `0 -> 1` on `[0, 1]` built from `exp(-1/x)`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

/// C-infinity bump equal to 1 on `|t| <= flat` and 0 on `|t| >= support`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub flat: f64,
    pub support: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { flat: 0.5, support: 1.0 }
    }
}

impl Window {
    pub fn new(flat: f64, support: f64) -> Result<Self> {
        if !(0.0 <= flat && flat < support) {
            return Err(Error::InvalidParameter(format!("window needs 0 <= flat < support, got {flat}, {support}")));
        }
        Ok(Self { flat, support })
    }

    /// The window `t -> eta(t / c)`.
    pub fn dilated(&self, c: f64) -> Self {
        Self {
            flat: self.flat * c,
            support: self.support * c,
        }
    }

    /// Constant 1, for unwindowed conversions.
    pub fn flat_everywhere() -> Self {
        Self {
            flat: f64::INFINITY,
            support: f64::INFINITY,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= self.flat {
            1.0
        } else if a >= self.support {
            0.0
        } else {
            smooth_step((self.support - a) / (self.support - self.flat))
        }
    }
}

/// Per-mode time series on a [`TimeGrid`]; mode-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSamples {
    n_max: usize,
    grid: TimeGrid,
    data: Vec<Complex64>,
}

impl TimeSamples {
    pub fn zeros(n_max: usize, grid: TimeGrid) -> Self {
        Self {
            n_max,
            grid,
            data: vec![Complex64::new(0.0, 0.0); 2 * n_max * grid.m],
        }
    }

    /// Samples `f(n, t_j)` for positive `n`; negative modes are conjugates.
    pub fn from_fn(n_max: usize, grid: TimeGrid, mut f: impl FnMut(i64, f64) -> Complex64) -> Self {
        let mut out = Self::zeros(n_max, grid);
        for n in 1..=n_max as i64 {
            for j in 0..grid.m {
                let c = f(n, grid.time(j));
                out.data[slot(n, n_max) * grid.m + j] = c;
                out.data[slot(-n, n_max) * grid.m + j] = c.conj();
            }
        }
        out
    }

    /// Samples of a list of fields, one per grid time.
    pub fn from_fields(grid: TimeGrid, fields: &[SpectralField]) -> Result<Self> {
        if fields.len() != grid.m {
            return Err(Error::GridMismatch(format!("{} fields for {} times", fields.len(), grid.m)));
        }
        let n_max = fields[0].n_max();
        let mut out = Self::zeros(n_max, grid);
        for (j, f) in fields.iter().enumerate() {
            if f.n_max() != n_max {
                return Err(Error::TruncationMismatch {
                    expected: n_max,
                    got: f.n_max(),
                });
            }
            for (s, c) in f.coeffs().iter().enumerate() {
                out.data[s * grid.m + j] = *c;
            }
        }
        Ok(out)
    }

    pub(crate) fn from_raw(n_max: usize, grid: TimeGrid, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), 2 * n_max * grid.m);
        Self { n_max, grid, data }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn mode(&self, n: i64) -> &[Complex64] {
        let s = slot(n, self.n_max);
        &self.data[s * self.grid.m..(s + 1) * self.grid.m]
    }

    pub fn mode_mut(&mut self, n: i64) -> &mut [Complex64] {
        let s = slot(n, self.n_max);
        let m = self.grid.m;
        &mut self.data[s * m..(s + 1) * m]
    }

    pub fn get(&self, n: i64, j: usize) -> Complex64 {
        if n == 0 || n.unsigned_abs() as usize > self.n_max {
            return Complex64::new(0.0, 0.0);
        }
        self.data[slot(n, self.n_max) * self.grid.m + j]
    }

    /// The field at grid time `t_j`.
    pub fn at(&self, j: usize) -> SpectralField {
        let m = self.grid.m;
        SpectralField::from_raw(self.n_max, (0..2 * self.n_max).map(|s| self.data[s * m + j]).collect())
    }

    pub fn map(&self, f: impl Fn(i64, usize, Complex64) -> Complex64) -> Self {
        let m = self.grid.m;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, c)| f(mode_of(i / m, self.n_max), i % m, *c))
            .collect();
        Self::from_raw(self.n_max, self.grid, data)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_raw(
            self.n_max,
            self.grid,
            self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|_, _, c| c * a)
    }

    /// Multiplies every sample by `window(t_j)`.
    pub fn windowed(&self, window: &Window) -> Self {
        let w: Vec<f64> = self.grid.times().iter().map(|&t| window.eval(t)).collect();
        self.map(|_, j, c| c * w[j])
    }

    /// Zero-padded or truncated copy at a new spatial truncation.
    pub fn resized(&self, n_max: usize) -> Self {
        let mut out = Self::zeros(n_max, self.grid);
        for n in modes(n_max.min(self.n_max)) {
            out.mode_mut(n).copy_from_slice(self.mode(n));
        }
        out
    }

    /// `max_j sup-norm over modes of |a - b|` restricted to `|t_j| <= t_max`.
    pub fn max_abs_diff(&self, other: &Self, t_max: f64) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.l2_profile(other, t_max)?.into_iter().fold(0.0, f64::max))
    }

    /// `l^2`-in-space distance at each grid time with `|t_j| <= t_max`.
    pub fn l2_profile(&self, other: &Self, t_max: f64) -> Result<Vec<f64>> {
        self.check_compatible(other)?;
        let m = self.grid.m;
        Ok((0..m)
            .filter(|&j| self.grid.time(j).abs() <= t_max + 1e-12)
            .map(|j| {
                (0..2 * self.n_max)
                    .map(|s| (self.data[s * m + j] - other.data[s * m + j]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect())
    }

    /// `max_j ||u(t_j)||_{l^2}` over the whole grid.
    pub fn sup_l2(&self) -> f64 {
        (0..self.grid.m).map(|j| self.at(j).l2_norm()).fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n_max != other.n_max {
            return Err(Error::TruncationMismatch {
                expected: self.n_max,
                got: other.n_max,
            });
        }
        self.grid.check_same(&other.grid)
    }
}

/// Coefficients on the `(tau, n)` lattice in a per-mode frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    n_max: usize,
    grid: TimeGrid,
    frame: Vec<f64>,
    data: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn zeros(n_max: usize, grid: TimeGrid, frame: Vec<f64>) -> Self {
        assert_eq!(frame.len(), 2 * n_max);
        Self {
            n_max,
            grid,
            frame,
            data: vec![Complex64::new(0.0, 0.0); 2 * n_max * grid.m],
        }
    }

    pub(crate) fn from_raw(n_max: usize, grid: TimeGrid, frame: Vec<f64>, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), 2 * n_max * grid.m);
        debug_assert_eq!(frame.len(), 2 * n_max);
        Self { n_max, grid, frame, data }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn frame(&self) -> &[f64] {
        &self.frame
    }

    pub fn frame_of(&self, n: i64) -> f64 {
        self.frame[slot(n, self.n_max)]
    }

    /// Coefficients of mode `n`, indexed by `kidx = k + M/2`.
    pub fn mode(&self, n: i64) -> &[Complex64] {
        let s = slot(n, self.n_max);
        &self.data[s * self.grid.m..(s + 1) * self.grid.m]
    }

    pub fn mode_mut(&mut self, n: i64) -> &mut [Complex64] {
        let s = slot(n, self.n_max);
        let m = self.grid.m;
        &mut self.data[s * m..(s + 1) * m]
    }

    /// Physical time frequency of lattice point `(kidx, n)`.
    pub fn tau(&self, n: i64, kidx: usize) -> f64 {
        self.frame_of(n) + self.grid.lambda(kidx)
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= a);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    /// `sqrt(2 T_w sum |c|^2)`, the lattice `L^2_{t,x}` norm.
    pub fn l2_norm(&self) -> f64 {
        (2.0 * self.grid.t_w * self.data.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Largest relative violation of `c(-tau, -n) = conj(c(tau, n))`.
    pub fn max_asymmetry(&self) -> f64 {
        let m = self.grid.m;
        let mut worst = 0.0f64;
        for n in 1..=self.n_max as i64 {
            let a = self.mode(n);
            let b = self.mode(-n);
            for kidx in 0..m {
                let k = self.grid.k_of(kidx);
                let mirror = ((-k).rem_euclid(m as i64) as usize + m / 2) % m;
                let (x, y) = (a[kidx], b[mirror]);
                let scale = x.norm().max(y.norm());
                if scale > 1e-300 {
                    worst = worst.max((x - y.conj()).norm() / scale);
                }
            }
        }
        worst
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n_max != other.n_max {
            return Err(Error::TruncationMismatch {
                expected: self.n_max,
                got: other.n_max,
            });
        }
        self.grid.check_same(&other.grid)?;
        if self.frame != other.frame {
            return Err(Error::GridMismatch("frames differ".into()));
        }
        Ok(())
    }

    /// Same field expressed in another frame.
    pub fn reframed(&self, frame: Vec<f64>) -> SpaceTimeField {
        st_transform(&st_inverse(self), &Window::flat_everywhere(), frame).expect("frame length matches")
    }
}

/// Frame vector `w_n` from a per-mode function; must be odd in `n`.
pub fn frame_from(n_max: usize, f: impl Fn(i64) -> f64) -> Vec<f64> {
    modes(n_max).map(f).collect()
}

/// Lattice coefficients of `e^{-i lambda_k t}`-twisted windowed samples, one mode.
pub(crate) fn forward_mode(series: &[Complex64], omega: f64, grid: &TimeGrid, window: &[f64]) -> Vec<Complex64> {
    let m = grid.m;
    let mut buf: Vec<Complex64> = series
        .iter()
        .enumerate()
        .map(|(j, c)| c * window[j] * Complex64::from_polar(1.0, -omega * grid.time(j)))
        .collect();
    fft::forward(&mut buf);
    let inv = 1.0 / m as f64;
    (0..m)
        .map(|kidx| {
            let k = grid.k_of(kidx);
            let sign = if k.rem_euclid(2) == 0 { inv } else { -inv };
            buf[k.rem_euclid(m as i64) as usize] * sign
        })
        .collect()
}

/// Time samples of one mode from its lattice coefficients.
pub(crate) fn inverse_mode(coeffs: &[Complex64], omega: f64, grid: &TimeGrid) -> Vec<Complex64> {
    let m = grid.m;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (kidx, c) in coeffs.iter().enumerate() {
        let k = grid.k_of(kidx);
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[k.rem_euclid(m as i64) as usize] = c * sign;
    }
    fft::inverse(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(j, c)| c * Complex64::from_polar(1.0, omega * grid.time(j)))
        .collect()
}

/// Windowed time samples to lattice coefficients in the given frame.
pub fn st_transform(samples: &TimeSamples, window: &Window, frame: Vec<f64>) -> Result<SpaceTimeField> {
    let n_max = samples.n_max();
    if frame.len() != 2 * n_max {
        return Err(Error::GridMismatch(format!("frame has {} entries for N = {n_max}", frame.len())));
    }
    let grid = samples.grid();
    let w: Vec<f64> = grid.times().iter().map(|&t| window.eval(t)).collect();
    let mut data = Vec::with_capacity(2 * n_max * grid.m);
    for s in 0..2 * n_max {
        let n = mode_of(s, n_max);
        data.extend(forward_mode(samples.mode(n), frame[s], &grid, &w));
    }
    Ok(SpaceTimeField::from_raw(n_max, grid, frame, data))
}

/// Time samples represented by lattice coefficients (equal to the windowed input).
pub fn st_inverse(v: &SpaceTimeField) -> TimeSamples {
    let grid = v.grid();
    let mut data = Vec::with_capacity(2 * v.n_max() * grid.m);
    for s in 0..2 * v.n_max() {
        let n = mode_of(s, v.n_max());
        data.extend(inverse_mode(v.mode(n), v.frame[s], &grid));
    }
    TimeSamples::from_raw(v.n_max(), grid, data)
}

/// Normalized space-time `L^p` norm on the lattice times and an exact spatial grid.
pub fn lebesgue_norm(v: &SpaceTimeField, p: u32) -> Result<f64> {
    if !matches!(p, 2 | 4 | 6) {
        return Err(Error::UnsupportedExponent(p));
    }
    let samples = st_inverse(v);
    let grid = samples.grid();
    let mx = ((p as usize / 2 + 1) * (2 * v.n_max() + 1)).next_power_of_two();
    let total: f64 = (0..grid.m)
        .map(|j| {
            samples
                .at(j)
                .to_grid(mx)
                .iter()
                .map(|x| x.abs().powi(p as i32))
                .sum::<f64>()
                / mx as f64
        })
        .sum();
    Ok((total / grid.m as f64).powf(1.0 / p as f64))
}

#[derive(Serialize, Deserialize)]
struct SpaceTimeWire {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T_w")]
    t_w: f64,
    #[serde(rename = "M")]
    m: usize,
    frame: Vec<f64>,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for SpaceTimeField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.grid.m;
        let mut coeffs = Vec::with_capacity(self.data.len());
        for kidx in 0..m {
            for slot in 0..2 * self.n_max {
                let c = self.data[slot * m + kidx];
                coeffs.push([c.re, c.im]);
            }
        }
        SpaceTimeWire {
            n: self.n_max,
            t_w: self.grid.t_w,
            m,
            frame: self.frame.clone(),
            coeffs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpaceTimeField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = SpaceTimeWire::deserialize(d)?;
        let grid = TimeGrid::new(w.t_w, w.m).map_err(D::Error::custom)?;
        if w.frame.len() != 2 * w.n || w.coeffs.len() != 2 * w.n * w.m {
            return Err(D::Error::custom("array lengths do not match N and M"));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); w.coeffs.len()];
        for kidx in 0..w.m {
            for slot in 0..2 * w.n {
                let p = w.coeffs[kidx * 2 * w.n + slot];
                data[slot * w.m + kidx] = Complex64::new(p[0], p[1]);
            }
        }
        Ok(SpaceTimeField::from_raw(w.n, grid, w.frame, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> TimeGrid {
        TimeGrid::new(2.0, 64).unwrap()
    }

    #[test]
    fn window_shape() {
        let w = Window::default();
        assert_eq!(w.eval(0.3), 1.0);
        assert_eq!(w.eval(-0.5), 1.0);
        assert_eq!(w.eval(1.2), 0.0);
        let mid = w.eval(0.75);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(w.eval(0.6) > w.eval(0.9));
    }

    #[test]
    fn round_trip_multiplies_by_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = grid();
        let x = TimeSamples::from_fn(3, g, |_, _| Complex64::new(rng.gen(), rng.gen()));
        let w = Window::default();
        let frame = frame_from(3, |n| (n * n * n) as f64);
        let back = st_inverse(&st_transform(&x, &w, frame).unwrap());
        let expect = x.windowed(&w);
        assert!(back.max_abs_diff(&expect, f64::INFINITY).unwrap() < 1e-12);
    }

    #[test]
    fn oscillation_centres_on_its_frequency() {
        let g = grid();
        let x = TimeSamples::from_fn(2, g, |n, t| if n == 2 { Complex64::from_polar(1.0, 8.0 * t) } else { Complex64::new(0.0, 0.0) });
        let v = st_transform(&x, &Window::default(), frame_from(2, |n| (n * n * n) as f64)).unwrap();
        let profile = v.mode(2);
        let peak = (0..g.m).max_by(|&a, &b| profile[a].norm().total_cmp(&profile[b].norm())).unwrap();
        assert_eq!(g.k_of(peak), 0);
        assert!((v.tau(2, peak) - 8.0).abs() < 1e-12);
        assert!(v.max_asymmetry() < 1e-12);
    }

    #[test]
    fn constant_mode_profile_is_window_transform() {
        let g = grid();
        let w = Window::default();
        let x = TimeSamples::from_fn(1, g, |_, _| Complex64::new(1.0, 0.0));
        let v = st_transform(&x, &w, vec![0.0; 2]).unwrap();
        for kidx in 0..g.m {
            let lam = g.lambda(kidx);
            let expect: Complex64 = g
                .times()
                .iter()
                .map(|&t| w.eval(t) * Complex64::from_polar(1.0, -lam * t))
                .sum::<Complex64>()
                / g.m as f64;
            assert!((v.mode(1)[kidx] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn spacetime_lebesgue_of_constant_mode() {
        let g = grid();
        let x = TimeSamples::from_fn(1, g, |_, _| Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let v = st_transform(&x, &Window::flat_everywhere(), vec![0.0; 2]).unwrap();
        assert!((lebesgue_norm(&v, 2).unwrap() - 1.0).abs() < 1e-12);
        let l4 = lebesgue_norm(&v, 4).unwrap();
        // mean of cos^4 is 3/8, scaled by (sqrt 2)^4
        assert!((l4.powi(4) - 1.5).abs() < 1e-12);
    }
}
