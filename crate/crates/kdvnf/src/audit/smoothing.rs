//! Decay and regularity diagnostics for `h = T^l(u, u)` and the fixed point.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::multipliers::{t_ell, ChiSpec};
use crate::phase::free_evolution;
use crate::solvers::PicardOutcome;
use crate::spacetime::{st_inverse, st_transform, SpaceTimeField, TimeGrid, TimeSamples, Window};

/// Hölder exponent used by the equicontinuity report.
pub const HOLDER_NU: f64 = 0.1;

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn times_within(grid: &TimeGrid, t_max: f64) -> Vec<usize> {
    (0..grid.m).filter(|&j| grid.time(j).abs() <= t_max + 1e-12).collect()
}

/// Windowed free evolution of unit-modulus coefficients with random phases.
pub fn white_free_field(n_max: usize, grid: TimeGrid, spec: &ChiSpec, window: &Window, seed: u64) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = SpectralField::random(n_max, &mut rng, |_| 1.0);
    st_transform(&free_evolution(&f, &spec.phase, grid, window), &Window::flat_everywhere(), spec.phase.frame(n_max))
        .expect("frame sized to the samples")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub s: f64,
    #[serde(rename = "N")]
    pub n_max: usize,
    /// `(shell start 2^j, RMS over 2^j <= n < 2^{j+1} of sup_t |h_n(t)|)`.
    pub shells: Vec<(usize, f64)>,
    /// Fitted exponent of the shell values against the shell centres.
    pub slope: f64,
}

/// Fits the decay of `sup_{|t| <= t_max} |h_n(t)|` over dyadic shells of `n >= 4`.
pub fn verify_h_smoothing(u: &SpaceTimeField, s: f64, spec: &ChiSpec, t_max: f64) -> Result<SmoothingReport> {
    let h = st_inverse(&t_ell(u, u, s, spec)?);
    let js = times_within(&h.grid(), t_max);
    let nm = u.n_max();
    let mut shells = Vec::new();
    let mut start = 4;
    while 2 * start - 1 <= nm {
        let sum: f64 = (start..2 * start)
            .map(|n| js.iter().map(|&j| h.get(n as i64, j).norm()).fold(0.0, f64::max).powi(2))
            .sum();
        shells.push((start, (sum / start as f64).sqrt()));
        start *= 2;
    }
    let centres: Vec<(f64, f64)> = shells.iter().map(|&(a, v)| ((a as f64 * (2 * a - 1) as f64).sqrt(), v)).collect();
    let slope = slope(&centres).ok_or_else(|| Error::EmptyRegion(format!("N = {nm} leaves fewer than two shells")))?;
    Ok(SmoothingReport { s, n_max: nm, shells, slope })
}

/// `sup_t ||(I - P_{<= m}) x(t)||_{l^2}`.
fn tail(x: &TimeSamples, m: usize, js: &[usize]) -> f64 {
    js.iter()
        .map(|&j| (m + 1..=x.n_max()).map(|n| 2.0 * x.get(n as i64, j).norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub m: usize,
    pub u: f64,
    pub v: f64,
    pub h: f64,
    /// `v - eta W_t f`, the part of `v` produced by the nonlinearity.
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
    /// Fitted decay exponents `-d log tail / d log m` over `2 <= m <= N/4`, away
    /// from the truncation where every tail is forced to zero.
    pub rate_u: Option<f64>,
    pub rate_v: Option<f64>,
    pub rate_h: Option<f64>,
    pub rate_w: Option<f64>,
}

/// Tails of the fixed point, of `h = T^l(u, u)` and of `v - eta W_t f` at dyadic `m < N`.
pub fn tail_smoothing(out: &PicardOutcome, f: &SpectralField, s: f64, spec: &ChiSpec, window: &Window, t_max: f64) -> Result<TailReport> {
    let u = st_inverse(&out.u);
    let v = st_inverse(&out.v);
    let h = st_inverse(&t_ell(&out.u, &out.u, s, spec)?);
    let w = v.sub(&free_evolution(f, &spec.phase, u.grid(), window))?;
    let js = times_within(&u.grid(), t_max);
    let mut rows = Vec::new();
    let mut m = 1;
    while m < u.n_max() {
        rows.push(TailRow {
            m,
            u: tail(&u, m, &js),
            v: tail(&v, m, &js),
            h: tail(&h, m, &js),
            w: tail(&w, m, &js),
        });
        m *= 2;
    }
    let top = u.n_max() / 4;
    let rate = |pick: fn(&TailRow) -> f64| {
        slope(&rows.iter().filter(|r| r.m >= 2 && r.m <= top).map(|r| (r.m as f64, pick(r))).collect::<Vec<_>>()).map(|x| -x)
    };
    Ok(TailReport {
        rate_u: rate(|r| r.u),
        rate_v: rate(|r| r.v),
        rate_h: rate(|r| r.h),
        rate_w: rate(|r| r.w),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub m: usize,
    /// `sup_{t != t'} ||P_{<= m}(u(t) - u(t'))|| / |t - t'|^nu`.
    pub c_u: f64,
    pub c_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquicontinuityReport {
    pub nu: f64,
    pub rows: Vec<HolderRow>,
    /// Fitted growth exponents of the constants in `m`.
    pub degree_u: Option<f64>,
    pub degree_v: Option<f64>,
}

fn holder_constant(x: &TimeSamples, m: usize, js: &[usize], nu: f64) -> f64 {
    let grid = x.grid();
    let proj: Vec<Vec<Complex64>> = js.iter().map(|&j| (1..=m as i64).map(|n| x.get(n, j)).collect()).collect();
    let mut best = 0.0f64;
    for a in 0..js.len() {
        for b in a + 1..js.len() {
            let d: f64 = proj[a].iter().zip(&proj[b]).map(|(p, q)| 2.0 * (p - q).norm_sqr()).sum::<f64>().sqrt();
            let dt = (grid.time(js[b]) - grid.time(js[a])).abs();
            best = best.max(d / dt.powf(nu));
        }
    }
    best
}

/// Hölder constants of `P_{<= m}` of both fixed-point components on `|t| <= t_max`.
pub fn equicontinuity(out: &PicardOutcome, nu: f64, t_max: f64) -> Result<EquicontinuityReport> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {nu} outside (0, 1)")));
    }
    let u = st_inverse(&out.u);
    let v = st_inverse(&out.v);
    let js = times_within(&u.grid(), t_max);
    let mut rows = Vec::new();
    let mut m = 1;
    while m <= u.n_max() {
        rows.push(HolderRow {
            m,
            c_u: holder_constant(&u, m, &js, nu),
            c_v: holder_constant(&v, m, &js, nu),
        });
        m *= 2;
    }
    let degree = |pick: fn(&HolderRow) -> f64| slope(&rows.iter().map(|r| (r.m as f64, pick(r))).collect::<Vec<_>>());
    Ok(EquicontinuityReport {
        nu,
        degree_u: degree(|r| r.c_u),
        degree_v: degree(|r| r.c_v),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhaseData;

    #[test]
    fn single_mode_h_lives_on_the_doubled_mode() {
        let s = 0.55;
        let grid = TimeGrid::new(2.0, 16).unwrap();
        let spec = ChiSpec::new(PhaseData::zero(8, s));
        let f = SpectralField::from_positive(8, |n| if n == 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let u = st_transform(&free_evolution(&f, &spec.phase, grid, &Window::default()), &Window::flat_everywhere(), spec.phase.frame(8)).unwrap();
        let h = st_inverse(&t_ell(&u, &u, s, &spec).unwrap());
        for n in 1..=8i64 {
            let peak = (0..grid.m).map(|j| h.get(n, j).norm()).fold(0.0, f64::max);
            assert!(if n == 2 { peak > 0.1 } else { peak == 0.0 }, "mode {n}: {peak}");
        }
    }

    #[test]
    fn slope_of_exact_power() {
        let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0].iter().map(|&x| (x, x.powf(-1.5))).collect();
        assert!((slope(&pts).unwrap() + 1.5).abs() < 1e-12);
    }
}
