//! The subcommands. Each returns its artifacts and the tolerance checks that failed.

use std::str::FromStr;

use kdvnf::audit::{
    audit_quad_cancellation, audit_symbol, equicontinuity, fit_slope, random_forcing_ensemble, random_vkn_ensemble, tail_smoothing,
    verify_cancellation, verify_duhamel_bound, verify_h_smoothing, verify_nf_identity_chi_free, verify_vkn, white_free_field,
    QuadCancellationReport, SymbolCase, SymbolReport, HOLDER_NU,
};
use kdvnf::multipliers::{ChiMode, ChiSpec};
use kdvnf::norms::{norm_report, strichartz_ratio};
use kdvnf::phase::{compute_phi, free_evolution, PhaseData};
use kdvnf::solvers::{picard_solve, reference_solve, IterationRecord, PicardConfig};
use kdvnf::spacetime::{st_transform, TimeGrid, Window};
use kdvnf::system::DuhamelCutoffs;
use kdvnf::{Error, SpectralField};
use serde::Serialize;
use serde_json::json;

use crate::artifacts::{to_csv, to_json};
use crate::config::{ConfigError, Profile, SessionConfig};

/// Time span of the trajectories used by the cancellation check.
const CANCELLATION_T_W: f64 = 0.5;
/// Data decay for the tail report; rough enough that the tails are not trivially small.
const ROUGH_DECAY: f64 = 0.55;
/// Smallest truncation for the shell fit, giving five shells from 4 upward.
const SMOOTHING_MIN_N: usize = 128;
/// Smallest truncation for the tail report, so that `2 <= m <= N/4` spans four dyadic levels.
const TAIL_MIN_N: usize = 64;

pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::EmptyRegion(_)
            | Error::GridMismatch(_)
            | Error::TruncationMismatch { .. }
            | Error::UnsupportedExponent(_)
            | Error::EmptyBlock(_)
            | Error::StepTooLarge { .. } => Failure::Config(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

pub struct Outcome {
    pub json: Vec<u8>,
    pub csv: Vec<u8>,
    pub summary: Vec<String>,
    /// Violated tolerances, each naming the quantity and its bound.
    pub failures: Vec<String>,
}

fn chi_spec(c: &SessionConfig, phase: PhaseData) -> ChiSpec {
    ChiSpec::new(phase).with_ramp(c.threshold_const, c.ramp_ratio)
}

fn grid(c: &SessionConfig) -> Result<TimeGrid, Failure> {
    Ok(TimeGrid::new(c.t_w, c.m)?)
}

#[derive(Serialize)]
struct StateRow {
    t: f64,
    l2_norm: f64,
}

pub fn simulate(c: &SessionConfig) -> Result<Outcome, Failure> {
    let f = c.data();
    let g = grid(c)?;
    // refine the step so that it divides the export spacing
    let dt = g.dt() / (g.dt() / c.dt).ceil();
    let traj = reference_solve(&f, c.s, c.t_w, dt)?;
    let samples = traj.sampled(g)?;
    let times = g.times();
    let states: Vec<SpectralField> = (0..g.m).map(|j| samples.at(j)).collect();
    let rows: Vec<StateRow> = times.iter().zip(&states).map(|(&t, u)| StateRow { t, l2_norm: u.l2_norm() }).collect();
    let drift = rows.iter().map(|r| (r.l2_norm - f.l2_norm()).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        json: to_json(&json!({ "meta": traj.meta, "times": times, "states": states })),
        csv: to_csv(&rows),
        summary: vec![format!("{} steps of {dt:.6e}; exported {} states; max |‖u(t)‖ − ‖f‖| = {drift:.3e}", traj.states.len() - 1, g.m)],
        failures: Vec::new(),
    })
}

pub fn fixpoint(c: &SessionConfig) -> Result<Outcome, Failure> {
    let f = c.data();
    let spec = chi_spec(c, compute_phi(&f, c.s));
    let mut config = PicardConfig::new(grid(c)?);
    config.eps = c.eps;
    config.gamma.delta = c.delta;
    let out = picard_solve(&f, c.s, &spec, c.tolerances.picard_tol, c.tolerances.max_iter, &config)?;
    let worst = out.ratios().into_iter().fold(0.0, f64::max);
    let mut failures = Vec::new();
    if worst > c.tolerances.contraction {
        failures.push(format!("contraction ratio {worst:.3e} exceeds {}", c.tolerances.contraction));
    }
    let warning = out.warning.as_ref().map(|w| w.to_string());
    let mut summary = vec![format!("converged in {} iterations, worst ratio {worst:.3e}", out.history.len())];
    summary.extend(warning.iter().map(|w| format!("warning: {w}")));
    Ok(Outcome {
        json: to_json(&json!({ "history": out.history, "warning": warning, "u": out.u, "v": out.v })),
        csv: to_csv::<IterationRecord>(&out.history),
        summary,
        failures,
    })
}

#[derive(Serialize)]
struct AuditRow<'a> {
    case_id: &'a str,
    s: f64,
    eps: f64,
    #[serde(rename = "Nmax")]
    n_max: usize,
    sup_ratio: f64,
    fit_exponent: Option<f64>,
    relative_change: Option<f64>,
    argmax: String,
}

pub fn audit_symbols(c: &SessionConfig) -> Result<Outcome, Failure> {
    let cases: Vec<SymbolCase> = match &c.audit_case {
        Some(id) => vec![SymbolCase::from_str(id)?],
        None => SymbolCase::ALL.to_vec(),
    };
    let nm = c.audit_n_max;
    let reports: Vec<SymbolReport> = cases.iter().map(|&k| audit_symbol(k, c.s, c.eps, nm)).collect::<kdvnf::Result<_>>()?;
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    let mut rows = Vec::new();
    for (case, r) in cases.iter().zip(&reports) {
        let change = r.relative_change_from(nm / 2);
        if case.bounded() {
            match change {
                Some(x) if x < c.tolerances.sup_change => {}
                Some(x) => failures.push(format!("{case}: sup changes by {x:.3} from Nmax = {} to {nm}, limit {}", nm / 2, c.tolerances.sup_change)),
                None => failures.push(format!("{case}: no supremum at Nmax = {}", nm / 2)),
            }
        } else {
            let target = 2.0 * c.s - 1.0;
            match r.fit_exponent {
                Some(x) if (x - target).abs() <= c.tolerances.fit => {}
                other => failures.push(format!("{case}: growth exponent {other:?} is not within {} of 2s - 1 = {target:.3}", c.tolerances.fit)),
            }
        }
        summary.push(format!("{case}: sup {:.4e}, change {:?}, fit {:?}", r.sup_ratio, change, r.fit_exponent));
        rows.push(AuditRow {
            case_id: case.id(),
            s: r.s,
            eps: r.eps,
            n_max: r.n_max,
            sup_ratio: r.sup_ratio,
            fit_exponent: r.fit_exponent,
            relative_change: change,
            argmax: r.argmax.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
        });
    }
    let quad: Option<QuadCancellationReport> = if cases.contains(&SymbolCase::Quad3Bi) {
        let spec = chi_spec(c, PhaseData::zero(nm, c.s));
        let q = audit_quad_cancellation(c.s, c.eps, nm, &spec)?;
        if q.violations > 0 {
            failures.push(format!("quadrilinear cancellation: {} pairs below c = 1/8", q.violations));
        }
        summary.push(format!("quad cancellation: c = {:.4} over {} pairs, {} violations", q.c_measured, q.pairs, q.violations));
        Some(q)
    } else {
        None
    };
    Ok(Outcome {
        json: to_json(&json!({ "reports": reports, "quad_cancellation": quad })),
        csv: to_csv(&rows),
        summary,
        failures,
    })
}

#[derive(Serialize)]
struct CheckRow {
    check: String,
    quantity: String,
    value: f64,
    bound: Option<f64>,
    pass: Option<bool>,
}

struct Checks {
    rows: Vec<CheckRow>,
    failures: Vec<String>,
}

impl Checks {
    fn report(&mut self, check: &str, quantity: &str, value: f64) {
        self.rows.push(CheckRow { check: check.into(), quantity: quantity.into(), value, bound: None, pass: None });
    }

    /// `upper`: the value must not exceed `bound`; otherwise it must reach it.
    fn gate(&mut self, check: &str, quantity: &str, value: f64, bound: f64, upper: bool) {
        let pass = if upper { value <= bound } else { value >= bound };
        if !pass {
            let rel = if upper { "<=" } else { ">=" };
            self.failures.push(format!("{check}: {quantity} = {value:.4e} violates {rel} {bound:.4e}"));
        }
        self.rows.push(CheckRow { check: check.into(), quantity: quantity.into(), value, bound: Some(bound), pass: Some(pass) });
    }
}

pub fn verify(c: &SessionConfig) -> Result<Outcome, Failure> {
    let t = &c.tolerances;
    let mut ck = Checks { rows: Vec::new(), failures: Vec::new() };
    let mut smooth = c.clone();
    smooth.profile = Profile::Smooth;

    // cancellation along reference trajectories, both time-local cutoffs
    let f = smooth.data_with(c.n, c.verify_amplitude);
    let phase = compute_phi(&f, c.s);
    let trajs = [c.verify_dt, c.verify_dt / 2.0].map(|dt| reference_solve(&f, c.s, CANCELLATION_T_W, dt));
    let [coarse, fine] = trajs;
    let (coarse, fine) = (coarse?, fine?);
    let mut cancellation = Vec::new();
    for (name, mode) in [("chi=1", ChiMode::One), ("chi=0", ChiMode::Zero)] {
        let spec = chi_spec(c, phase.clone()).with_mode(mode);
        let a = verify_cancellation(&coarse, &f, c.s, &spec)?;
        let b = verify_cancellation(&fine, &f, c.s, &spec)?;
        ck.gate("cancellation", &format!("residual {name}"), a.residual, t.cancellation, true);
        ck.gate("cancellation", &format!("reduction {name}"), a.residual / b.residual.max(f64::MIN_POSITIVE), t.reduction, false);
        cancellation.push((name, a, b));
    }

    // unrestricted normal-form identity under step halving
    let dts = [c.verify_nf_dt, c.verify_nf_dt / 2.0, c.verify_nf_dt / 4.0];
    let nf_trajs = dts.iter().map(|&dt| reference_solve(&f, c.s, c.verify_nf_t_w, dt)).collect::<kdvnf::Result<Vec<_>>>()?;
    let nf = verify_nf_identity_chi_free(&nf_trajs, c.s, c.verify_nf_t_w / 2.0);
    for row in &nf {
        match row.order {
            Some(o) => ck.gate("nf-identity", &format!("order at dt = {:e}", row.dt), o, t.order, false),
            None => ck.report("nf-identity", &format!("residual at dt = {:e}", row.dt), row.residual),
        }
    }

    // Duhamel and v K bounds on random ensembles
    let g = grid(c)?;
    let small = c.data();
    let phase_small = compute_phi(&small, c.s);
    let ens = random_forcing_ensemble(c.n, g, &phase_small, c.verify_ensemble, c.seed);
    let duhamel = verify_duhamel_bound(&ens, &phase_small, c.eps, &DuhamelCutoffs::scaled(c.t_w))?;
    ck.report("duhamel", "max Z/Z* ratio", duhamel.max);
    ck.report("duhamel", "median Z/Z* ratio", duhamel.median);
    let vk = random_vkn_ensemble(c.n, g, &phase_small, c.verify_ensemble, c.seed);
    let vkn = verify_vkn(&vk, &phase_small, c.s, c.eps)?;
    ck.report("vkn", "max ratio", vkn.max);
    ck.report("vkn", "median ratio", vkn.median);

    // smoothing of h for white coefficients
    let shell_n = c.n.max(SMOOTHING_MIN_N);
    let zero_spec = chi_spec(c, PhaseData::zero(shell_n, c.s));
    let white = white_free_field(shell_n, g, &zero_spec, &Window::default(), c.seed);
    let smoothing = verify_h_smoothing(&white, c.s, &zero_spec, 0.5)?;
    ck.gate("h-smoothing", "shell slope", smoothing.slope, -(1.5 - c.s) + t.smoothing_slack, true);

    // tails and time regularity of the fixed point for rough data
    let mut rough = c.clone();
    rough.decay = ROUGH_DECAY;
    rough.profile = Profile::Smooth;
    let tail_n = c.n.max(TAIL_MIN_N);
    let fr = rough.data_with(tail_n, c.delta);
    let spec_r = chi_spec(c, compute_phi(&fr, c.s));
    let mut pc = PicardConfig::new(TimeGrid::new(c.t_w, c.m.max(8 * tail_n))?);
    pc.eps = c.eps;
    pc.gamma.delta = c.delta;
    let out = picard_solve(&fr, c.s, &spec_r, t.picard_tol, t.max_iter, &pc)?;
    let tails = tail_smoothing(&out, &fr, c.s, &spec_r, &pc.gamma.cutoffs.outer, 0.4)?;
    match tails.rate_h {
        Some(r) => ck.gate("tail-smoothing", "h tail rate", r, 1.5 - c.s - 0.1, false),
        None => ck.failures.push("tail-smoothing: too few dyadic levels below N/4 for a rate".into()),
    }
    let holder = equicontinuity(&out, HOLDER_NU, 0.4)?;
    let finite = holder.rows.iter().all(|r| r.c_u.is_finite() && r.c_v.is_finite());
    if !finite {
        ck.failures.push("equicontinuity: a Hölder constant is not finite".into());
    }
    if let Some(d) = holder.degree_u {
        ck.report("equicontinuity", "growth degree of C(m)", d);
    }

    let summary = ck
        .rows
        .iter()
        .map(|r| match r.pass {
            Some(p) => format!("{} {}: {:.4e} (bound {:.4e}) {}", r.check, r.quantity, r.value, r.bound.unwrap_or(f64::NAN), if p { "ok" } else { "FAIL" }),
            None => format!("{} {}: {:.4e}", r.check, r.quantity, r.value),
        })
        .collect();
    Ok(Outcome {
        json: to_json(&json!({
            "cancellation": cancellation.iter().map(|(n, a, b)| json!({ "cutoff": n, "coarse": a, "fine": b })).collect::<Vec<_>>(),
            "nf_identity": nf,
            "duhamel": duhamel,
            "vkn": vkn,
            "h_smoothing": smoothing,
            "tails": tails,
            "equicontinuity": holder,
        })),
        csv: to_csv(&ck.rows),
        summary,
        failures: ck.failures,
    })
}

#[derive(Serialize)]
struct StrichartzRow {
    phase: &'static str,
    nd: usize,
    ratio: f64,
}

pub fn strichartz(c: &SessionConfig) -> Result<Outcome, Failure> {
    let blocks: Vec<usize> = std::iter::successors(Some(8usize), |&b| Some(2 * b)).take_while(|&b| 2 * b - 1 <= c.n).collect();
    if blocks.len() < 2 {
        return Err(Failure::Config(format!("N = {} leaves fewer than two dyadic blocks from 8; need N >= 32", c.n)));
    }
    let mut white = c.clone();
    white.profile = Profile::White;
    let g = white.data_with(c.n, 1.0);
    let bent = compute_phi(&c.data_with(c.n, c.verify_amplitude), c.s);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    let mut fits = Vec::new();
    for (name, phase) in [("zero", PhaseData::zero(c.n, c.s)), ("data", bent)] {
        let pts = blocks.iter().map(|&nd| strichartz_ratio(&g, &phase, 6, nd).map(|r| (nd, r))).collect::<kdvnf::Result<Vec<_>>>()?;
        let slope = fit_slope(&pts).unwrap_or(f64::NAN);
        if !(slope <= c.tolerances.strichartz_growth) {
            failures.push(format!("L6 ratio growth {slope:.3} for phase {name} exceeds {}", c.tolerances.strichartz_growth));
        }
        summary.push(format!("phase {name}: growth exponent {slope:.4}"));
        fits.push(json!({ "phase": name, "growth_exponent": slope }));
        rows.extend(pts.into_iter().map(|(nd, ratio)| StrichartzRow { phase: name, nd, ratio }));
    }
    Ok(Outcome {
        json: to_json(&json!({ "p": 6, "blocks": rows, "fits": fits })),
        csv: to_csv(&rows),
        summary,
        failures,
    })
}

pub fn norms(c: &SessionConfig) -> Result<Outcome, Failure> {
    let f = c.data();
    let phase = compute_phi(&f, c.s);
    let g = grid(c)?;
    let samples = free_evolution(&f, &phase, g, &DuhamelCutoffs::scaled(c.t_w).outer);
    let v = st_transform(&samples, &Window::flat_everywhere(), phase.frame(c.n))?;
    let rows = norm_report(&v, &phase, c.s, c.eps)?;
    let summary = rows.iter().map(|r| format!("{}: {:.6e}", r.norm_kind, r.value)).collect();
    Ok(Outcome {
        json: to_json(&rows),
        csv: to_csv(&rows),
        summary,
        failures: Vec::new(),
    })
}
