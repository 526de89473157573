use num_complex::Complex64;
use rayon::prelude::*;

use super::{bracket, ChiMode, ChiSpec};
use crate::field::slot;
use crate::phase::PhaseData;
use crate::spacetime::{forward_mode, inverse_mode, st_inverse, st_transform, SpaceTimeField, TimeGrid, TimeSamples, Window};

/// Which side of the modulation cutoff a factor is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    All,
    /// Multiplied by `chi`.
    Low,
    /// Multiplied by `1 - chi`.
    High,
}

pub(crate) enum Series<'a> {
    Zero,
    Borrowed(&'a [Complex64]),
    Owned(Vec<Complex64>),
}

impl Series<'_> {
    pub(crate) fn as_slice(&self) -> Option<&[Complex64]> {
        match self {
            Series::Zero => None,
            Series::Borrowed(s) => Some(s),
            Series::Owned(v) => Some(v),
        }
    }
}

/// A lattice field with its time samples and modulation brackets cached.
pub(crate) struct Prepared<'a> {
    pub field: &'a SpaceTimeField,
    pub samples: TimeSamples,
    brackets: Vec<f64>,
    range: Vec<(f64, f64)>,
}

impl<'a> Prepared<'a> {
    pub fn new(field: &'a SpaceTimeField, phase: &PhaseData) -> Self {
        let grid = field.grid();
        let m = grid.m;
        let n_max = field.n_max();
        let mut brackets = Vec::with_capacity(2 * n_max * m);
        let mut range = Vec::with_capacity(2 * n_max);
        for (s, n) in crate::field::modes(n_max).enumerate() {
            let offset = field.frame()[s] - phase.dispersion_ext(n);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for kidx in 0..m {
                let b = bracket(offset + grid.lambda(kidx));
                lo = lo.min(b);
                hi = hi.max(b);
                brackets.push(b);
            }
            range.push((lo, hi));
        }
        Self {
            field,
            samples: st_inverse(field),
            brackets,
            range,
        }
    }

    pub fn n_max(&self) -> usize {
        self.field.n_max()
    }

    /// Samples of mode `n` restricted by `chi(n, .; partner)` to `part`.
    pub fn filtered(&self, n: i64, partner: i64, part: Part, chi: Option<&ChiSpec>) -> Series<'_> {
        let plain = Series::Borrowed(self.samples.mode(n));
        let chi = match (part, chi) {
            (Part::All, _) | (Part::Low, None) => return plain,
            (Part::High, None) => return Series::Zero,
            (_, Some(c)) => c,
        };
        let all_low = match chi.mode {
            ChiMode::One => Some(true),
            ChiMode::Zero => Some(false),
            ChiMode::Restricted => {
                let theta = chi.threshold(n, partner);
                let (lo, hi) = self.range[slot(n, self.n_max())];
                if hi <= theta {
                    Some(true)
                } else if lo >= chi.ramp_ratio * theta {
                    Some(false)
                } else {
                    None
                }
            }
        };
        match (all_low, part) {
            (Some(true), Part::Low) | (Some(false), Part::High) => plain,
            (Some(_), _) => Series::Zero,
            (None, _) => {
                let m = self.field.grid().m;
                let s = slot(n, self.n_max());
                let b = &self.brackets[s * m..(s + 1) * m];
                let coeffs: Vec<Complex64> = self
                    .field
                    .mode(n)
                    .iter()
                    .zip(b)
                    .map(|(c, &br)| {
                        let w = chi.weight(br, n, partner);
                        c * if part == Part::Low { w } else { 1.0 - w }
                    })
                    .collect();
                Series::Owned(inverse_mode(&coeffs, self.field.frame()[s], &self.field.grid()))
            }
        }
    }
}

/// Filters an arbitrary time series living at spatial mode `n` by `chi(n, .; partner)`.
pub(crate) fn filter_series(
    series: &[Complex64],
    n: i64,
    partner: i64,
    frame: f64,
    grid: &TimeGrid,
    part: Part,
    chi: &ChiSpec,
) -> Option<Vec<Complex64>> {
    match (chi.mode, part) {
        (_, Part::All) | (ChiMode::One, Part::Low) | (ChiMode::Zero, Part::High) => return Some(series.to_vec()),
        (ChiMode::One, Part::High) | (ChiMode::Zero, Part::Low) => return None,
        _ => {}
    }
    let offset = frame - chi.phase.dispersion_ext(n);
    let theta = chi.threshold(n, partner);
    let (lo, hi) = (0..grid.m).fold((f64::INFINITY, 0.0f64), |(lo, hi), kidx| {
        let b = bracket(offset + grid.lambda(kidx));
        (lo.min(b), hi.max(b))
    });
    let low_everywhere = hi <= theta;
    let high_everywhere = lo >= chi.ramp_ratio * theta;
    match part {
        Part::Low if low_everywhere => return Some(series.to_vec()),
        Part::Low if high_everywhere => return None,
        Part::High if low_everywhere => return None,
        Part::High if high_everywhere => return Some(series.to_vec()),
        _ => {}
    }
    let ones = vec![1.0; grid.m];
    let coeffs = forward_mode(series, frame, grid, &ones);
    let filtered: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(kidx, c)| {
            let w = chi.weight(bracket(offset + grid.lambda(kidx)), n, partner);
            c * if part == Part::Low { w } else { 1.0 - w }
        })
        .collect();
    Some(inverse_mode(&filtered, frame, grid))
}

pub(crate) struct BilinearPlan<'a> {
    pub symbol: &'a (dyn Fn(i64, i64) -> Complex64 + Sync),
    pub parts: (Part, Part),
    pub chi: Option<&'a ChiSpec>,
    pub n_out: usize,
}

/// Time samples of `sum_{n1 + n2 = n} sigma(n1, n2) U_{n1} V_{n2}` with filtered factors.
///
/// Positive output modes are computed independently in parallel, each with a
/// fixed sequential summation order; negative modes are their conjugates.
pub(crate) fn bilinear_samples(u: &Prepared, v: &Prepared, plan: &BilinearPlan) -> TimeSamples {
    let grid = u.field.grid();
    let m = grid.m;
    let (nu, nv) = (u.n_max() as i64, v.n_max() as i64);
    let rows: Vec<Vec<Complex64>> = (1..=plan.n_out as i64)
        .into_par_iter()
        .map(|n| {
            let mut acc = vec![Complex64::new(0.0, 0.0); m];
            for n1 in (n - nv).max(-nu)..=(n + nv).min(nu) {
                let n2 = n - n1;
                if n1 == 0 || n2 == 0 {
                    continue;
                }
                let sym = (plan.symbol)(n1, n2);
                if sym == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let a = u.filtered(n1, n2, plan.parts.0, plan.chi);
                let Some(a) = a.as_slice() else { continue };
                let b = v.filtered(n2, n1, plan.parts.1, plan.chi);
                let Some(b) = b.as_slice() else { continue };
                for ((o, x), y) in acc.iter_mut().zip(a).zip(b) {
                    *o += sym * x * y;
                }
            }
            acc
        })
        .collect();
    assemble(plan.n_out, grid, rows)
}

/// Builds samples from rows for modes `1..=n_out`, mirroring negative modes.
pub(crate) fn assemble(n_out: usize, grid: TimeGrid, rows: Vec<Vec<Complex64>>) -> TimeSamples {
    let mut out = TimeSamples::zeros(n_out, grid);
    for (i, row) in rows.into_iter().enumerate() {
        let n = i as i64 + 1;
        out.mode_mut(-n).iter_mut().zip(&row).for_each(|(o, c)| *o = c.conj());
        out.mode_mut(n).copy_from_slice(&row);
    }
    out
}

pub(crate) fn to_field(samples: &TimeSamples, frame: Vec<f64>) -> SpaceTimeField {
    st_transform(samples, &Window::flat_everywhere(), frame).expect("frame sized to the samples")
}
