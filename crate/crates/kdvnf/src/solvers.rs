//! Reference integration of the truncated equation and the Picard iteration of `Gamma`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::multipliers::fixed::n_static;
use crate::multipliers::{symbol_n, t_ell, ChiSpec};
use crate::norms::{norm_y, norm_z, DEFAULT_EPS};
use crate::phase::free_evolution;
use crate::spacetime::{st_inverse, st_transform, SpaceTimeField, TimeGrid, TimeSamples, Window};
use crate::system::{gamma_map, windowed, DuhamelCutoffs, GammaConfig};

/// Growth factor of `||u||` over `||f||` treated as blowup.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    #[serde(rename = "N")]
    pub n_max: usize,
    pub dt: f64,
    pub order: u32,
    #[serde(rename = "T_w")]
    pub t_w: f64,
    pub s: f64,
    pub f: SpectralField,
}

/// States on the uniform grid `t_j = -T_w + j dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    /// Index of the state at time `t`, which must be a grid time.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let j = ((t + self.meta.t_w) / self.meta.dt).round();
        (j >= 0.0 && (j as usize) < self.times.len())
            .then_some(j as usize)
            .filter(|&j| (self.times[j] - t).abs() < 1e-9 * self.meta.dt.max(1.0))
    }

    /// The trajectory at the times of `grid`, whose step must be a multiple of the trajectory's.
    pub fn sampled(&self, grid: TimeGrid) -> Result<TimeSamples> {
        let fields = grid
            .times()
            .iter()
            .map(|&t| {
                self.index_of(t)
                    .map(|j| self.states[j].clone())
                    .ok_or_else(|| Error::GridMismatch(format!("time {t} is not on the trajectory grid")))
            })
            .collect::<Result<Vec<_>>>()?;
        TimeSamples::from_fields(grid, &fields)
    }
}

/// `max_n sum_{n1} |sigma_N(n1, n - n1)| 2 |f_{n1}|`, the Lipschitz constant of `N` at `f` in `l^inf`.
fn nonlinear_rate(f: &SpectralField, s: f64) -> f64 {
    let nm = f.n_max() as i64;
    (1..=nm)
        .map(|n| {
            (-nm..=nm)
                .filter(|&n1| n1 != 0 && n1 != n && (n - n1).abs() <= nm)
                .map(|n1| 2.0 * symbol_n(n1, n - n1, s).norm() * f.get(n1).norm())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Integrates `u_t + u_xxx = N(u, u)`, truncated to the modes of `f`, on `[-T_w, T_w]`.
///
/// Integrating factor `e^{i n^3 t}` with classical fourth-order stages on the
/// nonlinear part; products are dealiased. Steps outward from `u(0) = f`.
pub fn reference_solve(f: &SpectralField, s: f64, t_w: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && t_w > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt}, T_w = {t_w}")));
    }
    let steps = (t_w / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - t_w).abs() > 1e-9 * t_w {
        return Err(Error::InvalidParameter(format!("T_w = {t_w} is not a multiple of dt = {dt}")));
    }
    let limit = 2.5 / nonlinear_rate(f, s).max(f64::MIN_POSITIVE);
    if dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    let n_max = f.n_max();
    let bound = BLOWUP_FACTOR * f.l2_norm().max(f64::MIN_POSITIVE);
    let mut states = vec![SpectralField::zeros(n_max); 2 * steps + 1];
    states[steps] = f.clone();
    for dir in [1.0, -1.0] {
        let h = dir * dt;
        let mut u = f.clone();
        for k in 1..=steps {
            u = if_rk4_step(&u, h, s);
            let norm = u.l2_norm();
            if !norm.is_finite() || norm > bound {
                return Err(Error::BlowupDetected { t: k as f64 * h, norm });
            }
            let idx = (steps as isize + dir as isize * k as isize) as usize;
            states[idx] = u.clone();
        }
    }
    let times = (0..=2 * steps).map(|j| -t_w + j as f64 * dt).collect();
    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta {
            n_max,
            dt,
            order: 4,
            t_w,
            s,
            f: f.clone(),
        },
    })
}

pub(crate) fn airy(u: &SpectralField, t: f64) -> SpectralField {
    SpectralField::from_positive(u.n_max(), |n| u.get(n) * Complex64::from_polar(1.0, (n * n * n) as f64 * t))
}

fn axpy(a: &SpectralField, x: &SpectralField, c: f64) -> SpectralField {
    a.add(&x.scale(c)).expect("same truncation")
}

/// One integrating-factor fourth-order step of size `h` (either sign).
fn if_rk4_step(u: &SpectralField, h: f64, s: f64) -> SpectralField {
    let n_max = u.n_max();
    let nl = |x: &SpectralField| n_static(x, x, s, n_max);
    let a = nl(u);
    let half = airy(u, h / 2.0);
    let b = nl(&airy(&axpy(u, &a, h / 2.0), h / 2.0));
    let c = nl(&axpy(&half, &b, h / 2.0));
    let d = nl(&axpy(&airy(u, h), &airy(&c, h / 2.0), h));
    let incr = airy(&a, h)
        .add(&airy(&b.add(&c).expect("same truncation"), h / 2.0).scale(2.0))
        .and_then(|x| x.add(&d))
        .expect("same truncation");
    axpy(&airy(u, h), &incr, h / 6.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub grid: TimeGrid,
    pub gamma: GammaConfig,
    /// Exponent shift used by the `Y` and `Z` distances.
    pub eps: f64,
    /// Consecutive non-contracting steps tolerated before giving up.
    pub patience: usize,
}

impl PicardConfig {
    pub fn new(grid: TimeGrid) -> Self {
        Self {
            grid,
            gamma: GammaConfig {
                cutoffs: DuhamelCutoffs::scaled(grid.t_w),
                ..GammaConfig::default()
            },
            eps: DEFAULT_EPS,
            patience: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// `||Gamma_1||_Y`.
    pub norm_y: f64,
    /// `||Gamma_2||_Z`.
    pub norm_z: f64,
    /// `||Gamma_1 - phi_1||_Y + ||Gamma_2 - phi_2||_Z`.
    pub residual: f64,
    /// `residual / previous residual`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub u: SpaceTimeField,
    pub v: SpaceTimeField,
    pub history: Vec<IterationRecord>,
    /// Smallness warning raised by the map, if any.
    pub warning: Option<Error>,
}

impl PicardOutcome {
    pub fn ratios(&self) -> Vec<f64> {
        self.history.iter().filter_map(|r| r.ratio).collect()
    }
}

/// Iterates `Gamma` from `(eta W_t f, eta W_t f)` until the step falls below `tol`.
pub fn picard_solve(f: &SpectralField, s: f64, spec: &ChiSpec, tol: f64, max_iter: usize, config: &PicardConfig) -> Result<PicardOutcome> {
    let phase = &spec.phase;
    let start = free_evolution(f, phase, config.grid, &config.gamma.cutoffs.outer);
    let mut phi1 = st_transform(&start, &Window::flat_everywhere(), phase.frame(f.n_max()))?;
    let mut phi2 = phi1.clone();
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut stalled = 0;
    for iter in 1..=max_iter {
        let image = gamma_map(&phi1, &phi2, f, s, spec, &config.gamma)?;
        let warning = image.warning.clone();
        let residual = norm_y(&image.gamma1.sub(&phi1)?, phase, config.eps)? + norm_z(&image.gamma2.sub(&phi2)?, phase, config.eps)?;
        let ratio = history.last().map(|r| residual / r.residual);
        history.push(IterationRecord {
            iter,
            norm_y: norm_y(&image.gamma1, phase, config.eps)?,
            norm_z: norm_z(&image.gamma2, phase, config.eps)?,
            residual,
            ratio,
        });
        phi1 = image.gamma1;
        phi2 = image.gamma2;
        if residual <= tol {
            return Ok(PicardOutcome { u: phi1, v: phi2, history, warning });
        }
        stalled = if ratio.is_some_and(|r| r >= 1.0) { stalled + 1 } else { 0 };
        if stalled >= config.patience {
            return Err(Error::NoContraction {
                iter,
                ratios: history.iter().filter_map(|r| r.ratio).collect(),
            });
        }
    }
    Err(Error::MaxIterExceeded {
        iters: max_iter,
        last: history.last().map_or(f64::NAN, |r| r.residual),
    })
}

/// Largest `||u - window T^l(u, u) - v||_{L^2_x}` over `|t| <= t_max`.
pub fn identity_defect(out: &PicardOutcome, s: f64, spec: &ChiSpec, window: &Window, t_max: f64) -> Result<f64> {
    let h = windowed(&t_ell(&out.u, &out.u, s, spec)?, window);
    st_inverse(&out.u).max_abs_diff(&st_inverse(&h.add(&out.v)?), t_max)
}

/// Largest `||(d_t - i n^3) u - N(u, u)||_{L^2_x}` over `|t| <= t_max`, by fourth-order
/// central differences taken in the Airy-rotating frame.
pub fn kdv_residual(u: &SpaceTimeField, s: f64, t_max: f64) -> Result<f64> {
    let x = st_inverse(u);
    let grid = x.grid();
    let dt = grid.dt();
    let rot = |j: usize| airy(&x.at(j), -grid.time(j));
    let mut worst = 0.0f64;
    for j in 2..grid.m - 2 {
        let t = grid.time(j);
        if t.abs() > t_max {
            continue;
        }
        let d = rot(j - 2)
            .sub(&rot(j - 1).scale(8.0))
            .and_then(|a| a.add(&rot(j + 1).scale(8.0)))
            .and_then(|a| a.sub(&rot(j + 2)))?
            .scale(1.0 / (12.0 * dt));
        let uj = x.at(j);
        worst = worst.max(airy(&d, t).sub(&n_static(&uj, &uj, s, u.n_max()))?.l2_norm());
    }
    Ok(worst)
}
