//! Checks of the exact identities along computed trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::multipliers::fixed::{m_static, n_static, t_static};
use crate::multipliers::{n_ell, resonant_r, t_ell, three_t_ell_of, ChiMode, ChiSpec};
use crate::phase::propagate;
use crate::quad::cumulative;
use crate::solvers::{airy, Trajectory};
use crate::spacetime::{st_inverse, st_transform, TimeGrid, TimeSamples, Window};
use crate::system::RESONANT_WEIGHT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    #[serde(rename = "N")]
    pub n_max: usize,
    pub dt: f64,
    /// `max_n sup_t |P_n(t) - P_n(0) - int_0^t Re[conj(r_n + w_n) NR_n]|`.
    pub residual: f64,
    pub worst_mode: i64,
    pub worst_time: f64,
    /// `max_n sup_t |P_n(t)|`, the scale the residual is measured against.
    pub p_scale: f64,
}

/// `h` and `NR` at one instant for the time-local cutoffs.
fn local_pieces(u: &SpectralField, s: f64, mode: ChiMode) -> (SpectralField, SpectralField) {
    let nm = u.n_max();
    let c = RESONANT_WEIGHT;
    let r_u = resonant_r(u, u, u, s).expect("same truncation");
    match mode {
        ChiMode::One => {
            let h = t_static(u, u, s, nm);
            let v = u.sub(&h).expect("same truncation");
            let r_v = resonant_r(&v, &v, &v, s).expect("same truncation");
            let nr = m_static(u, u, u, s).add(&r_u.sub(&r_v).expect("same truncation")).expect("same truncation").scale(-c);
            (h, nr)
        }
        ChiMode::Zero => (SpectralField::zeros(nm), n_static(u, u, s, nm).add(&r_u.scale(c)).expect("same truncation")),
        ChiMode::Restricted => unreachable!("rejected by the caller"),
    }
}

fn origin_of(traj: &Trajectory) -> Result<usize> {
    traj.index_of(0.0).ok_or_else(|| Error::DecompositionFailed("trajectory does not contain t = 0".into()))
}

/// Compares `P_n = Re[conj(r_n) w_n] + |w_n|^2 / 2` with the time integral of
/// `Re[conj(r_n + w_n) NR_n]` along a reference trajectory.
///
/// The cutoff must be time-local (`ChiMode::One` or `ChiMode::Zero`) so that `h`
/// and `NR` can be formed instant by instant; the restricted cutoff is a
/// multiplier in `tau` and is checked on the lattice instead.
pub fn verify_cancellation(traj: &Trajectory, f: &SpectralField, s: f64, spec: &ChiSpec) -> Result<CancellationReport> {
    if spec.mode == ChiMode::Restricted {
        return Err(Error::DecompositionFailed("the trajectory check needs a time-local cutoff (chi = 1 or chi = 0)".into()));
    }
    if f.n_max() != traj.meta.n_max || spec.phase.n_max() != traj.meta.n_max {
        return Err(Error::TruncationMismatch { expected: traj.meta.n_max, got: f.n_max() });
    }
    let origin = origin_of(traj)?;
    let nm = traj.meta.n_max;
    let len = traj.states.len();
    let mut p = vec![vec![0.0; len]; nm];
    let mut g = vec![vec![Complex64::new(0.0, 0.0); len]; nm];
    for (j, (u, &t)) in traj.states.iter().zip(&traj.times).enumerate() {
        let (h, nr) = local_pieces(u, s, spec.mode);
        let v = u.sub(&h)?;
        let r = propagate(f, &spec.phase, t);
        for n in 1..=nm as i64 {
            let (rn, vn) = (r.get(n), v.get(n));
            let wn = vn - rn;
            p[n as usize - 1][j] = (rn.conj() * wn).re + 0.5 * wn.norm_sqr();
            g[n as usize - 1][j] = Complex64::new((vn.conj() * nr.get(n)).re, 0.0);
        }
    }
    let mut out = CancellationReport {
        n_max: nm,
        dt: traj.meta.dt,
        residual: 0.0,
        worst_mode: 1,
        worst_time: 0.0,
        p_scale: 0.0,
    };
    for n in 0..nm {
        let integral = cumulative(&g[n], origin, traj.meta.dt);
        for j in 0..len {
            out.p_scale = out.p_scale.max(p[n][j].abs());
            let e = (p[n][j] - p[n][origin] - integral[j].re).abs();
            if e > out.residual {
                out.residual = e;
                out.worst_mode = n as i64 + 1;
                out.worst_time = traj.times[j];
            }
        }
    }
    Ok(out)
}

/// One refinement level of an identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub dt: f64,
    pub residual: f64,
    /// `log2` of the residual ratio to the previous (coarser) row.
    pub order: Option<f64>,
}

fn with_orders(levels: Vec<(f64, f64)>) -> Vec<RefinementRow> {
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(levels.len());
    for (dt, residual) in levels {
        let order = rows.last().map(|prev| (prev.residual / residual).log2() / (prev.dt / dt).log2());
        rows.push(RefinementRow { dt, residual, order });
    }
    rows
}

/// Rotating-frame fourth-order central difference `e^{i n^3 t} d_t [e^{-i n^3 t} x(t)]` at index `j`.
fn rotating_derivative(x: impl Fn(usize) -> SpectralField, times: &[f64], j: usize, dt: f64) -> SpectralField {
    let rot = |k: usize| airy(&x(k), -times[k]);
    let d = rot(j - 2)
        .sub(&rot(j - 1).scale(8.0))
        .and_then(|a| a.add(&rot(j + 1).scale(8.0)))
        .and_then(|a| a.sub(&rot(j + 2)))
        .expect("same truncation")
        .scale(1.0 / (12.0 * dt));
    airy(&d, times[j])
}

/// Largest `||(d_t - i n^3) T(u, u) - N(u, u) - 2 T(N(u, u), u)||` on `|t| <= t_max`,
/// with `N` truncated as in the reference equation.
fn static_identity_residual(traj: &Trajectory, s: f64, t_max: f64) -> f64 {
    let nm = traj.meta.n_max;
    let dt = traj.meta.dt;
    let tt = |k: usize| t_static(&traj.states[k], &traj.states[k], s, nm);
    let mut worst = 0.0f64;
    for j in 2..traj.states.len() - 2 {
        if traj.times[j].abs() > t_max + 1e-12 {
            continue;
        }
        let u = &traj.states[j];
        let nl = n_static(u, u, s, nm);
        let rhs = nl.add(&t_static(&nl, u, s, nm).scale(2.0)).expect("same truncation");
        let lhs = rotating_derivative(tt, &traj.times, j, dt);
        worst = worst.max(lhs.sub(&rhs).expect("same truncation").l2_norm());
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfIdentityReport {
    /// Identity for the unrestricted normal form, one row per trajectory.
    pub chi_free: Vec<RefinementRow>,
    /// Identity for the cutoff normal form on the lattice of each trajectory.
    pub chi_form: Vec<RefinementRow>,
    pub t_max: f64,
}

/// Lattice residual of `(d_t - i n^3) T^l(u, u) - 2 T^l(N(u, u), u) - N^l(u, u)`.
///
/// The trajectory is windowed to `|t| <= 0.9 T_w` and transformed on the lattice
/// whose step is the trajectory's; the residual is read where the window is flat.
fn chi_identity_residual(traj: &Trajectory, s: f64, spec: &ChiSpec, t_max: f64) -> Result<f64> {
    let t_w = traj.meta.t_w;
    let m = ((2.0 * t_w / traj.meta.dt).round()) as usize;
    let grid = TimeGrid::new(t_w, m)?;
    let window = Window::new(0.6 * t_w, 0.9 * t_w)?;
    let samples = traj.sampled(grid)?.windowed(&window);
    let u = st_transform(&samples, &Window::flat_everywhere(), spec.phase.frame(traj.meta.n_max))?;
    let h = st_inverse(&t_ell(&u, &u, s, spec)?);
    let rhs = st_inverse(&three_t_ell_of(&u, &u, &u, s, spec)?.scale(2.0 / 3.0).add(&n_ell(&u, &u, s, spec)?)?);
    let times = grid.times();
    let mut worst = 0.0f64;
    for j in 2..m - 2 {
        if times[j].abs() > t_max + 1e-12 {
            continue;
        }
        let lhs = rotating_derivative(|k| h.at(k), &times, j, grid.dt());
        worst = worst.max(lhs.sub(&rhs.at(j))?.l2_norm());
    }
    Ok(worst)
}

/// Normal-form identities along trajectories of successively halved steps.
///
/// The lattice form needs `2 T_w / dt` to be a power of two.
pub fn verify_nf_identity(trajs: &[Trajectory], s: f64, spec: &ChiSpec, t_max: f64) -> Result<NfIdentityReport> {
    if trajs.is_empty() {
        return Err(Error::InvalidParameter("no trajectories given".into()));
    }
    let chi_free = with_orders(trajs.iter().map(|tr| (tr.meta.dt, static_identity_residual(tr, s, t_max))).collect());
    let chi_form = with_orders(
        trajs
            .iter()
            .map(|tr| chi_identity_residual(tr, s, spec, t_max).map(|r| (tr.meta.dt, r)))
            .collect::<Result<Vec<_>>>()?,
    );
    Ok(NfIdentityReport { chi_free, chi_form, t_max })
}

/// Only the unrestricted identity, for callers without a lattice-compatible step.
pub fn verify_nf_identity_chi_free(trajs: &[Trajectory], s: f64, t_max: f64) -> Vec<RefinementRow> {
    with_orders(trajs.iter().map(|tr| (tr.meta.dt, static_identity_residual(tr, s, t_max))).collect())
}

/// Samples `x` on the trajectory's own grid as a time series per mode.
pub fn trajectory_samples(traj: &Trajectory) -> Result<TimeSamples> {
    let m = traj.states.len() - 1;
    if !m.is_power_of_two() {
        return Err(Error::GridMismatch(format!("{m} steps is not a power of two")));
    }
    let grid = TimeGrid::new(traj.meta.t_w, m)?;
    traj.sampled(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{compute_phi, PhaseData};
    use crate::solvers::reference_solve;

    fn smooth(n_max: usize, amp: f64) -> SpectralField {
        SpectralField::from_positive(n_max, |n| Complex64::new(amp, 0.5 * amp * n as f64) / (n as f64).powi(6))
    }

    #[test]
    fn single_top_mode_has_constant_p() {
        // With only mode N present the quadratic interaction leaves the truncation,
        // so NR vanishes and P_n stays at zero.
        let f = SpectralField::from_positive(4, |n| if n == 4 { Complex64::new(0.3, 0.1) } else { Complex64::new(0.0, 0.0) });
        let s = 0.55;
        let tr = reference_solve(&f, s, 0.25, 1e-3).unwrap();
        let spec = ChiSpec::new(compute_phi(&f, s)).with_mode(ChiMode::One);
        let rep = verify_cancellation(&tr, &f, s, &spec).unwrap();
        assert!(rep.residual < 1e-13 && rep.p_scale < 1e-13, "{rep:?}");
    }

    #[test]
    fn cancellation_holds_for_both_local_limits() {
        let s = 0.55;
        let f = smooth(8, 0.05);
        let tr = reference_solve(&f, s, 0.25, 1e-3).unwrap();
        for mode in [ChiMode::One, ChiMode::Zero] {
            let spec = ChiSpec::new(compute_phi(&f, s)).with_mode(mode);
            let rep = verify_cancellation(&tr, &f, s, &spec).unwrap();
            assert!(rep.residual < 1e-10 * rep.p_scale.max(1e-3), "{mode:?}: {rep:?}");
        }
        let restricted = ChiSpec::new(compute_phi(&f, s));
        assert!(verify_cancellation(&tr, &f, s, &restricted).is_err());
    }

    #[test]
    fn chi_free_identity_converges() {
        let s = 0.55;
        let f = smooth(8, 0.3);
        let trajs: Vec<_> = [0.004, 0.002].iter().map(|&dt| reference_solve(&f, s, 0.128, dt).unwrap()).collect();
        let rows = verify_nf_identity_chi_free(&trajs, s, 0.1);
        assert!(rows[1].order.unwrap() > 3.5, "{rows:?}");
    }

    #[test]
    fn zero_cutoff_identity_is_trivial() {
        let s = 0.55;
        let f = smooth(4, 0.1);
        let tr = reference_solve(&f, s, 0.128, 0.004).unwrap();
        let spec = ChiSpec::new(PhaseData::zero(4, s)).with_mode(ChiMode::Zero);
        let rep = verify_nf_identity(&[tr], s, &spec, 0.05).unwrap();
        assert_eq!(rep.chi_form[0].residual, 0.0);
    }
}
