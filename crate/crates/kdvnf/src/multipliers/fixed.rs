//! The same operators at a single instant, with `chi = 1`.

use num_complex::Complex64;

use super::{symbol_n, symbol_t};
use crate::field::{bessel_weight, convolve_dense, modes, SpectralField};

fn weighted_dense(a: &SpectralField, s: f64, divide_by_n: bool) -> Vec<Complex64> {
    let n_max = a.n_max();
    let mut out = a.dense(n_max);
    for (i, c) in out.iter_mut().enumerate() {
        let n = i as i64 - n_max as i64;
        if n != 0 {
            *c *= bessel_weight(n, s);
            if divide_by_n {
                *c /= n as f64;
            }
        }
    }
    out
}

/// Dense `N(a, b)` over `|m| <= N_a + N_b`, zero slot included and zeroed.
pub fn n_dense(a: &SpectralField, b: &SpectralField, s: f64) -> Vec<Complex64> {
    let mut conv = convolve_dense(&weighted_dense(a, s, false), &weighted_dense(b, s, false));
    let ext = (conv.len() - 1) / 2;
    for (i, c) in conv.iter_mut().enumerate() {
        let m = i as i64 - ext as i64;
        *c *= Complex64::new(0.0, m as f64 / bessel_weight(m, s));
    }
    conv
}

fn restrict(dense: &[Complex64], n_out: usize) -> SpectralField {
    let ext = (dense.len() - 1) / 2;
    SpectralField::from_raw(
        n_out,
        modes(n_out)
            .map(|n| if n.unsigned_abs() as usize <= ext { dense[(n + ext as i64) as usize] } else { Complex64::new(0.0, 0.0) })
            .collect(),
    )
}

/// `N(a, b)` truncated to `|n| <= n_out`.
pub fn n_static(a: &SpectralField, b: &SpectralField, s: f64, n_out: usize) -> SpectralField {
    restrict(&n_dense(a, b, s), n_out)
}

/// `T(a, b)` truncated to `|n| <= n_out`.
pub fn t_static(a: &SpectralField, b: &SpectralField, s: f64, n_out: usize) -> SpectralField {
    let mut conv = convolve_dense(&weighted_dense(a, s, true), &weighted_dense(b, s, true));
    let ext = (conv.len() - 1) / 2;
    for (i, c) in conv.iter_mut().enumerate() {
        let m = i as i64 - ext as i64;
        *c *= if m == 0 { 0.0 } else { -1.0 / (3.0 * bessel_weight(m, s)) };
    }
    restrict(&conv, n_out)
}

/// Resonant part of `N(a, b)` at intermediate frequency `m` as seen from output `n`.
#[inline]
pub(crate) fn n_resonant_at(
    n: i64,
    m: i64,
    s: f64,
    get_a: impl Fn(i64) -> Complex64,
    get_b: impl Fn(i64) -> Complex64,
    n_max: i64,
) -> Complex64 {
    let p = m - n;
    if p == 0 || p.abs() > n_max || n.abs() > n_max {
        return Complex64::new(0.0, 0.0);
    }
    let sym = symbol_n(n, p, s);
    if p == n {
        sym * get_a(n) * get_b(n)
    } else {
        sym * (get_a(n) * get_b(p) + get_a(p) * get_b(n))
    }
}

/// `3 T(N(a, b), c)` with the intermediate frequency untruncated.
pub fn three_t_static(a: &SpectralField, b: &SpectralField, c: &SpectralField, s: f64) -> SpectralField {
    trilinear_static(a, b, c, s, false)
}

/// Nonresonant part of [`three_t_static`]: terms with `H3 != 0`.
pub fn m_static(a: &SpectralField, b: &SpectralField, c: &SpectralField, s: f64) -> SpectralField {
    trilinear_static(a, b, c, s, true)
}

fn trilinear_static(a: &SpectralField, b: &SpectralField, c: &SpectralField, s: f64, drop_resonant: bool) -> SpectralField {
    let n_max = c.n_max();
    let nfull = n_dense(a, b, s);
    let ext = ((nfull.len() - 1) / 2) as i64;
    SpectralField::from_positive(n_max, |n| {
        let mut acc = Complex64::new(0.0, 0.0);
        for n3 in modes(n_max) {
            let m = n - n3;
            if m == 0 || m.abs() > ext {
                continue;
            }
            let mut nm = nfull[(m + ext) as usize];
            if drop_resonant {
                nm -= n_resonant_at(n, m, s, |k| a.get(k), |k| b.get(k), a.n_max() as i64);
            }
            acc += 3.0 * symbol_t(m, n3, s) * nm * c.get(n3);
        }
        acc
    })
}
