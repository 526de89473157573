//! Cumulative quadrature of uniformly sampled series.

use num_complex::Complex64;

/// `int_{t_i}^{t_{i+1}}` of the cubic through the four nearest samples.
#[inline]
fn interval(f: &[Complex64], i: usize, dt: f64) -> Complex64 {
    let m = f.len();
    let w = dt / 24.0;
    if i >= 1 && i + 2 < m {
        (13.0 * (f[i] + f[i + 1]) - f[i - 1] - f[i + 2]) * w
    } else if i == 0 {
        (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) * w
    } else {
        (f[i - 2] - 5.0 * f[i - 1] + 19.0 * f[i] + 9.0 * f[i + 1]) * w
    }
}

/// `F(t_j) = int_{t_origin}^{t_j} f`, fourth order, integrating outward from `origin`.
pub(crate) fn cumulative(f: &[Complex64], origin: usize, dt: f64) -> Vec<Complex64> {
    let m = f.len();
    assert!(m >= 4 && origin < m);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for i in origin..m - 1 {
        out[i + 1] = out[i] + interval(f, i, dt);
    }
    for i in (0..origin).rev() {
        out[i] = out[i + 1] - interval(f, i, dt);
    }
    out
}
