use num_complex::Complex64;
use rayon::prelude::*;

use super::engine::{assemble, filter_series, to_field, BilinearPlan, Part, Prepared};
use super::fixed::n_resonant_at;
use super::{symbol_n, symbol_t, ChiSpec};
use crate::error::{Error, Result};
use crate::field::{bessel_weight, modes, SpectralField};
use crate::spacetime::{st_inverse, SpaceTimeField, TimeSamples};

/// `<n>^{2s} / n`.
#[inline]
pub(crate) fn resonant_coeff(n: i64, s: f64) -> f64 {
    bessel_weight(n, 2.0 * s) / n as f64
}

/// Closed form of the resonant operator, symmetrized over its arguments:
/// `(i <n>^{2s} / 3n) (a_n b_n conj(c_n) + a_n c_n conj(b_n) + b_n c_n conj(a_n))`.
///
/// With equal arguments this is `i <n>^{2s} |u_n|^2 u_n / n`.
pub fn resonant_r(a: &SpectralField, b: &SpectralField, c: &SpectralField, s: f64) -> Result<SpectralField> {
    if a.n_max() != b.n_max() || a.n_max() != c.n_max() {
        return Err(Error::TruncationMismatch {
            expected: a.n_max(),
            got: b.n_max().max(c.n_max()),
        });
    }
    Ok(SpectralField::from_positive(a.n_max(), |n| {
        resonant_point(a.get(n), b.get(n), c.get(n), n, s)
    }))
}

#[inline]
fn resonant_point(a: Complex64, b: Complex64, c: Complex64, n: i64, s: f64) -> Complex64 {
    Complex64::new(0.0, resonant_coeff(n, s) / 3.0) * (a * b * c.conj() + a * c * b.conj() + b * c * a.conj())
}

/// `R(r,r,w) + R(w,r,r) + R(r,w,r) = i c_n |r_n|^2 w_n + 2 i c_n Re[conj(r_n) w_n] r_n`, `c_n = <n>^{2s}/n`.
pub fn resonant_r_linear_in_w(r: &SpectralField, w: &SpectralField, s: f64) -> SpectralField {
    SpectralField::from_positive(r.n_max(), |n| {
        let (rn, wn) = (r.get(n), w.get(n));
        let c = Complex64::new(0.0, resonant_coeff(n, s));
        c * (rn.norm_sqr() * wn + 2.0 * (rn.conj() * wn).re * rn)
    })
}

/// `R(w,w,r) + R(r,w,w) + R(w,r,w) = i c_n |w_n|^2 r_n + 2 i c_n Re[conj(r_n) w_n] w_n`.
pub fn resonant_r_quadratic_in_w(r: &SpectralField, w: &SpectralField, s: f64) -> SpectralField {
    resonant_r_linear_in_w(w, r, s)
}

/// Restriction of the full sum `3 T(N(a, b), c)` to the resonant set
/// `H3 = 0, n1 + n2 != 0`, by direct triple summation, symmetrized over the
/// three arguments. Independent of the closed form.
pub fn resonant_r_oracle(a: &SpectralField, b: &SpectralField, c: &SpectralField, s: f64) -> Result<SpectralField> {
    let n_max = a.n_max();
    if b.n_max() != n_max || c.n_max() != n_max {
        return Err(Error::TruncationMismatch {
            expected: n_max,
            got: b.n_max().max(c.n_max()),
        });
    }
    let nm = n_max as i64;
    let restricted = |x: &SpectralField, y: &SpectralField, z: &SpectralField, n: i64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for n1 in -nm..=nm {
            for n2 in -nm..=nm {
                let n3 = n - n1 - n2;
                if n1 == 0 || n2 == 0 || n3 == 0 || n3.abs() > nm || n1 + n2 == 0 {
                    continue;
                }
                if (n2 + n3) * (n3 + n1) != 0 {
                    continue;
                }
                acc += 3.0 * symbol_t(n1 + n2, n3, s) * symbol_n(n1, n2, s) * x.get(n1) * y.get(n2) * z.get(n3);
            }
        }
        acc
    };
    Ok(SpectralField::from_positive(n_max, |n| {
        (restricted(a, b, c, n) + restricted(b, c, a, n) + restricted(c, a, b, n)) / 3.0
    }))
}

/// Lattice version of [`resonant_r`], pointwise in time.
pub fn resonant_r_field(u1: &SpaceTimeField, u2: &SpaceTimeField, u3: &SpaceTimeField, s: f64) -> Result<SpaceTimeField> {
    u1.check_compatible(u2)?;
    u1.check_compatible(u3)?;
    let out = resonant_samples(&st_inverse(u1), &st_inverse(u2), &st_inverse(u3), s);
    Ok(to_field(&out, u1.frame().to_vec()))
}

pub(crate) fn resonant_samples(a: &TimeSamples, b: &TimeSamples, c: &TimeSamples, s: f64) -> TimeSamples {
    let rows = (1..=a.n_max() as i64)
        .map(|n| {
            a.mode(n)
                .iter()
                .zip(b.mode(n))
                .zip(c.mode(n))
                .map(|((x, y), z)| resonant_point(*x, *y, *z, n, s))
                .collect()
        })
        .collect();
    assemble(a.n_max(), a.grid(), rows)
}

/// Samples of `N(u1, u2)` on `1 <= |m| <= 2N`, no cutoff, no truncation.
pub(crate) fn nonlinearity_samples(u1: &TimeSamples, u2: &TimeSamples, s: f64) -> TimeSamples {
    let grid = u1.grid();
    let nm = u1.n_max() as i64;
    let rows = (1..=2 * nm)
        .into_par_iter()
        .map(|m| {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.m];
            for n1 in (m - nm).max(-nm)..=nm.min(m + nm) {
                let n2 = m - n1;
                if n1 == 0 || n2 == 0 {
                    continue;
                }
                let sym = symbol_n(n1, n2, s);
                for ((o, x), y) in acc.iter_mut().zip(u1.mode(n1)).zip(u2.mode(n2)) {
                    *o += sym * x * y;
                }
            }
            acc
        })
        .collect();
    assemble(2 * u1.n_max(), grid, rows)
}

/// `N(u1, u2)` on the doubled truncation, in the frame `L_m` (`m^3` beyond the data's modes).
pub fn nonlinearity_full(u1: &SpaceTimeField, u2: &SpaceTimeField, s: f64, spec: &ChiSpec) -> Result<SpaceTimeField> {
    u1.check_compatible(u2)?;
    let out = nonlinearity_samples(&st_inverse(u1), &st_inverse(u2), s);
    Ok(to_field(&out, spec.phase.frame(2 * u1.n_max())))
}

/// `3 T^l(N(u1, u2), u3)` through the generic bilinear path.
pub fn three_t_ell_of(u1: &SpaceTimeField, u2: &SpaceTimeField, u3: &SpaceTimeField, s: f64, spec: &ChiSpec) -> Result<SpaceTimeField> {
    spec.check_field(u3)?;
    let nf = nonlinearity_full(u1, u2, s, spec)?;
    let pn = Prepared::new(&nf, &spec.phase);
    let pu = Prepared::new(u3, &spec.phase);
    let plan = BilinearPlan {
        symbol: &|m, n3| (3.0 * symbol_t(m, n3, s)).into(),
        parts: (Part::Low, Part::Low),
        chi: Some(spec),
        n_out: u3.n_max(),
    };
    let out = super::bilinear_samples(&pn, &pu, &plan);
    Ok(to_field(&out, u3.frame().to_vec()))
}

/// Resonant/nonresonant split of `3 T^l(N(u1, u2), u3)`.
#[derive(Debug, Clone)]
pub struct TrilinearSplit {
    /// Terms with `H3 != 0`.
    pub m: SpaceTimeField,
    /// Terms with `H3 = 0`, `n1 + n2 != 0`, with the cutoffs applied.
    pub r_ell: SpaceTimeField,
    /// `R - R^l`; present when the three arguments coincide.
    pub r_h: Option<SpaceTimeField>,
}

pub fn trilinear_m(u1: &SpaceTimeField, u2: &SpaceTimeField, u3: &SpaceTimeField, s: f64, spec: &ChiSpec) -> Result<TrilinearSplit> {
    spec.check_field(u1)?;
    u1.check_compatible(u2)?;
    u1.check_compatible(u3)?;
    let grid = u1.grid();
    let nm = u1.n_max() as i64;
    let (x1, x2, x3) = (st_inverse(u1), st_inverse(u2), st_inverse(u3));
    let nfull = nonlinearity_samples(&x1, &x2, s);
    let zero = || vec![Complex64::new(0.0, 0.0); grid.m];
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = (1..=nm)
        .into_par_iter()
        .map(|n| {
            let (mut acc_m, mut acc_r) = (zero(), zero());
            for n3 in modes(u1.n_max()) {
                let m = n - n3;
                if m == 0 || m.abs() > 2 * nm {
                    continue;
                }
                let sym = 3.0 * symbol_t(m, n3, s);
                let frame_m = spec.phase.dispersion_ext(m);
                let frame_3 = u3.frame_of(n3);
                let Some(c3) = filter_series(x3.mode(n3), n3, m, frame_3, &grid, Part::Low, spec) else { continue };
                let full = nfull.mode(m);
                let res: Vec<Complex64> = (0..grid.m)
                    .map(|j| n_resonant_at(n, m, s, |k| x1.get(k, j), |k| x2.get(k, j), nm))
                    .collect();
                let nonres: Vec<Complex64> = full.iter().zip(&res).map(|(a, b)| a - b).collect();
                if let Some(f) = filter_series(&nonres, m, n3, frame_m, &grid, Part::Low, spec) {
                    for ((o, a), b) in acc_m.iter_mut().zip(&f).zip(&c3) {
                        *o += sym * a * b;
                    }
                }
                if res.iter().any(|c| *c != Complex64::new(0.0, 0.0)) {
                    if let Some(f) = filter_series(&res, m, n3, frame_m, &grid, Part::Low, spec) {
                        for ((o, a), b) in acc_r.iter_mut().zip(&f).zip(&c3) {
                            *o += sym * a * b;
                        }
                    }
                }
            }
            (acc_m, acc_r)
        })
        .collect();
    let (rm, rr): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let frame = u1.frame().to_vec();
    let m_field = to_field(&assemble(u1.n_max(), grid, rm), frame.clone());
    let r_ell = to_field(&assemble(u1.n_max(), grid, rr), frame.clone());
    let r_h = if u1 == u2 && u2 == u3 {
        let r = to_field(&resonant_samples(&x1, &x2, &x3, s), frame);
        Some(r.sub(&r_ell)?)
    } else {
        None
    };
    Ok(TrilinearSplit { m: m_field, r_ell, r_h })
}
