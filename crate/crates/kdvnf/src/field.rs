//! Truncated Fourier coefficients of real, mean-zero periodic functions.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Default relative tolerance for the Hermitian pairing check in [`make_field`].
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;

/// Storage slot of mode `n` in a field truncated at `n_max`.
///
/// Slots run over `-N..=-1` followed by `1..=N`; the zero mode has no slot.
#[inline]
pub fn slot(n: i64, n_max: usize) -> usize {
    debug_assert!(n != 0 && n.unsigned_abs() as usize <= n_max);
    if n < 0 {
        (n + n_max as i64) as usize
    } else {
        (n - 1) as usize + n_max
    }
}

/// Mode number stored at `slot`.
#[inline]
pub fn mode_of(slot: usize, n_max: usize) -> i64 {
    if slot < n_max {
        slot as i64 - n_max as i64
    } else {
        (slot - n_max) as i64 + 1
    }
}

/// Iterator over the represented modes in slot order.
pub fn modes(n_max: usize) -> impl Iterator<Item = i64> + Clone {
    let n = n_max as i64;
    (-n..=-1).chain(1..=n)
}

/// `<n>^s = (1 + n^2)^{s/2}`.
#[inline]
pub fn bessel_weight(n: i64, s: f64) -> f64 {
    let n = n as f64;
    (1.0 + n * n).powf(0.5 * s)
}

/// Coefficients `u_n`, `1 <= |n| <= N`, of a real mean-zero function.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n_max: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(n_max: usize) -> Self {
        Self {
            n_max,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * n_max],
        }
    }

    /// Builds a field from its positive modes; negative modes are the conjugates.
    pub fn from_positive(n_max: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let mut out = Self::zeros(n_max);
        for n in 1..=n_max as i64 {
            let c = f(n);
            out.coeffs[slot(n, n_max)] = c;
            out.coeffs[slot(-n, n_max)] = c.conj();
        }
        out
    }

    /// Random phases with modulus `profile(n)` on each positive mode.
    pub fn random<R: Rng>(n_max: usize, rng: &mut R, profile: impl Fn(i64) -> f64) -> Self {
        Self::from_positive(n_max, |n| {
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            Complex64::from_polar(profile(n), theta)
        })
    }

    /// Wraps raw slot-ordered coefficients without validation.
    pub(crate) fn from_raw(n_max: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), 2 * n_max);
        Self { n_max, coeffs }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `n`; zero for `n = 0` or `|n| > N`.
    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        if n == 0 || n.unsigned_abs() as usize > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[slot(n, self.n_max)]
        }
    }

    /// Sets mode `n` and its mirror so that symmetry is kept.
    pub fn set_pair(&mut self, n: i64, c: Complex64) {
        self.coeffs[slot(n, self.n_max)] = c;
        self.coeffs[slot(-n, self.n_max)] = c.conj();
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> + Clone {
        modes(self.n_max)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_raw(self.n_max, self.coeffs.iter().map(|c| c * a).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same(self, other)?;
        Ok(Self::from_raw(
            self.n_max,
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same(self, other)?;
        Ok(Self::from_raw(
            self.n_max,
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Zero-padded or truncated copy at a new truncation.
    pub fn resized(&self, n_max: usize) -> Self {
        let mut out = Self::zeros(n_max);
        for n in modes(n_max.min(self.n_max)) {
            out.coeffs[slot(n, n_max)] = self.get(n);
        }
        out
    }

    /// `l^2` norm of the coefficients, equal to the normalized `L^2` norm.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest relative mismatch `|u_n - conj(u_{-n})| / max(|u_n|, |u_{-n}|)`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 1..=self.n_max as i64 {
            let a = self.get(n);
            let b = self.get(-n);
            let scale = a.norm().max(b.norm());
            if scale > 0.0 {
                worst = worst.max((a - b.conj()).norm() / scale);
            }
        }
        worst
    }

    /// Dense array over `-n_ext..=n_ext` including an explicit zero slot.
    pub(crate) fn dense(&self, n_ext: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * n_ext + 1];
        for n in modes(self.n_max.min(n_ext)) {
            out[(n + n_ext as i64) as usize] = self.get(n);
        }
        out
    }

    /// Physical values `u(x_j)`, `x_j = 2 pi j / m`, requires `m > 2N`.
    pub fn to_grid(&self, m: usize) -> Vec<f64> {
        assert!(m > 2 * self.n_max, "grid too coarse for the truncation");
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for n in self.modes() {
            buf[n.rem_euclid(m as i64) as usize] = self.get(n);
        }
        fft::inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

fn check_same(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.n_max != b.n_max {
        return Err(Error::TruncationMismatch {
            expected: a.n_max,
            got: b.n_max,
        });
    }
    Ok(())
}

/// Validates slot-ordered coefficients and enforces exact symmetry.
pub fn make_field(coeffs: &[Complex64], n_max: usize) -> Result<SpectralField> {
    make_field_with_tol(coeffs, n_max, DEFAULT_SYMMETRY_TOL)
}

pub fn make_field_with_tol(coeffs: &[Complex64], n_max: usize, tol: f64) -> Result<SpectralField> {
    if coeffs.len() == 2 * n_max + 1 {
        return Err(Error::ZeroModePresent);
    }
    if coeffs.len() != 2 * n_max {
        return Err(Error::TruncationMismatch {
            expected: 2 * n_max,
            got: coeffs.len(),
        });
    }
    let raw = SpectralField::from_raw(n_max, coeffs.to_vec());
    let mut out = SpectralField::zeros(n_max);
    for n in 1..=n_max as i64 {
        let a = raw.get(n);
        let b = raw.get(-n);
        let scale = a.norm().max(b.norm());
        let rel = if scale > 0.0 { (a - b.conj()).norm() / scale } else { 0.0 };
        if rel > tol {
            return Err(Error::SymmetryViolation { n, rel });
        }
        out.set_pair(n, 0.5 * (a + b.conj()));
    }
    Ok(out)
}

pub fn apply_bessel(u: &SpectralField, s: f64) -> SpectralField {
    let mut out = u.clone();
    for (k, c) in out.coeffs.iter_mut().enumerate() {
        *c *= bessel_weight(mode_of(k, u.n_max), s);
    }
    out
}

/// `(sum <n>^{2s} |u_n|^2)^{1/2}`.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    u.modes()
        .map(|n| bessel_weight(n, 2.0 * s) * u.get(n).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Normalized `L^p_x` norm, exact for the represented trigonometric polynomial.
pub fn lebesgue_norm_x(u: &SpectralField, p: u32) -> Result<f64> {
    if !matches!(p, 2 | 4 | 6) {
        return Err(Error::UnsupportedExponent(p));
    }
    let m = ((p as usize / 2 + 1) * (2 * u.n_max + 1)).next_power_of_two();
    let grid = u.to_grid(m);
    let mean = grid.iter().map(|x| x.abs().powi(p as i32)).sum::<f64>() / m as f64;
    Ok(mean.powf(1.0 / p as f64))
}

/// Linear convolution of dense arrays centred at zero, via padded transforms.
pub(crate) fn convolve_dense(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let na = (a.len() - 1) / 2;
    let nb = (b.len() - 1) / 2;
    let nc = na + nb;
    let size = (2 * nc + 1).next_power_of_two();
    let load = |x: &[Complex64], nx: usize| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (i, c) in x.iter().enumerate() {
            let n = i as i64 - nx as i64;
            buf[n.rem_euclid(size as i64) as usize] = *c;
        }
        fft::inverse(&mut buf);
        buf
    };
    let mut fa = load(a, na);
    let fb = load(b, nb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft::forward(&mut fa);
    let inv = 1.0 / size as f64;
    (0..2 * nc + 1)
        .map(|i| {
            let n = i as i64 - nc as i64;
            fa[n.rem_euclid(size as i64) as usize] * inv
        })
        .collect()
}

/// Alias-free convolution `sum_{n1+n2=n} a_{n1} b_{n2}` on `1 <= |n| <= N`.
pub fn convolve(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    convolve_with_zero(a, b).map(|(f, _)| f)
}

/// As [`convolve`], also returning the discarded mass at `n = 0`.
pub fn convolve_with_zero(a: &SpectralField, b: &SpectralField) -> Result<(SpectralField, Complex64)> {
    check_same(a, b)?;
    let n = a.n_max;
    let full = convolve_dense(&a.dense(n), &b.dense(n));
    let zero = full[2 * n];
    let out = SpectralField::from_raw(n, modes(n).map(|k| full[(k + 2 * n as i64) as usize]).collect());
    Ok((out, zero))
}

/// Direct-summation path of [`convolve`].
pub fn convolve_direct(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    check_same(a, b)?;
    let n = a.n_max as i64;
    Ok(SpectralField::from_raw(
        a.n_max,
        modes(a.n_max)
            .map(|k| {
                let lo = (k - n).max(-n);
                let hi = (k + n).min(n);
                (lo..=hi)
                    .filter(|&n1| n1 != 0 && n1 != k)
                    .map(|n1| a.get(n1) * b.get(k - n1))
                    .sum()
            })
            .collect(),
    ))
}

#[derive(Serialize, Deserialize)]
struct FieldWire {
    #[serde(rename = "N")]
    n: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for SpectralField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldWire {
            n: self.n_max,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = FieldWire::deserialize(d)?;
        let coeffs: Vec<Complex64> = w.coeffs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        make_field(&coeffs, w.n).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn make_field_accepts_conjugate_pairs() {
        assert!(make_field(&[c(1.0, 0.0), c(1.0, 0.0)], 1).is_ok());
        let f = make_field(&[c(1.0, -2.0), c(1.0, 2.0)], 1).unwrap();
        assert_eq!(f.get(1), c(1.0, 2.0));
        assert!(matches!(
            make_field(&[c(0.0, 1.0), c(0.0, 1.0)], 1),
            Err(Error::SymmetryViolation { n: 1, .. })
        ));
        assert_eq!(make_field(&[c(0.0, 0.0); 3], 1), Err(Error::ZeroModePresent));
    }

    #[test]
    fn slots_round_trip() {
        for k in 0..10 {
            assert_eq!(slot(mode_of(k, 5), 5), k);
        }
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_weight(0, 3.7), 1.0);
        assert!((bessel_weight(1, 1.0) - 1.4142136).abs() < 1e-7);
        assert!((bessel_weight(2, 0.5) - 1.4953488).abs() < 1e-7);
        let u = SpectralField::from_positive(1, |_| c(1.0, 0.0));
        assert!((apply_bessel(&u, 2.0).get(1) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn convolution_of_cosines() {
        let a = SpectralField::from_positive(2, |n| if n == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let (out, zero) = convolve_with_zero(&a, &a).unwrap();
        assert!((out.get(2) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((out.get(-2) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(out.get(1).norm() < 1e-14);
        assert!((zero - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn convolution_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = SpectralField::random(32, &mut rng, |_| 1.0);
        let b = SpectralField::random(32, &mut rng, |n| 1.0 / n as f64);
        let fast = convolve(&a, &b).unwrap();
        let slow = convolve_direct(&a, &b).unwrap();
        let scale = slow.l2_norm();
        assert!(fast.sub(&slow).unwrap().l2_norm() <= 1e-12 * scale);
    }

    #[test]
    fn norms_of_single_mode() {
        let u = SpectralField::from_positive(1, |_| c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        assert!((sobolev_norm(&u, 0.0) - 1.0).abs() < 1e-15);
        assert!((sobolev_norm(&u, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((lebesgue_norm_x(&u, 2).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(lebesgue_norm_x(&u, 3), Err(Error::UnsupportedExponent(3)));
    }

    #[test]
    fn json_round_trip_keeps_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = SpectralField::random(4, &mut rng, |_| 1.0);
        let text = serde_json::to_string(&a).unwrap();
        let b: SpectralField = serde_json::from_str(&text).unwrap();
        assert_eq!(a, b);
    }
}
