//! Dyadic modulation weights and the lattice norms built from them.
//!
//! A lattice coefficient `c(n, k)` sits at `tau = frame_n + lambda_k` and has
//! modulation `<tau - L_n>`. The annulus index is `L = 2^j` with
//! `2^j <= <tau - L_n> < 2^{j+1}`. `L^2_tau` norms use the measure `dtau / 2pi`,
//! so that `||v||_{L^2_tau} = ||v||_{L^2_t}`; `L^1_tau` norms use the same measure,
//! which makes `sum_k |c(n, k)|` the `L^1_tau` norm of mode `n`.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{bessel_weight, modes, SpectralField};
use crate::multipliers::bracket;
use crate::phase::PhaseData;
use crate::spacetime::{lebesgue_norm, SpaceTimeField};

pub const DEFAULT_EPS: f64 = 0.01;
pub const DEFAULT_LL_THRESHOLD: f64 = 8.0;

const LEVELS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightKind {
    Y,
    Z,
    Xtilde,
    Xsb,
    Zstar,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Y => "Y",
            WeightKind::Z => "Z",
            WeightKind::Xtilde => "Xtilde",
            WeightKind::Xsb => "Xsb",
            WeightKind::Zstar => "Zstar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub eps: f64,
    pub s: f64,
    pub b: f64,
    /// `L << |n|` means `L < |n| / ll_threshold`.
    pub ll_threshold: f64,
}

impl WeightSpec {
    pub fn new(kind: WeightKind) -> Self {
        Self {
            kind,
            eps: DEFAULT_EPS,
            s: 0.0,
            b: 0.0,
            ll_threshold: DEFAULT_LL_THRESHOLD,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn with_ll_threshold(mut self, t: f64) -> Self {
        self.ll_threshold = t;
        self
    }

    #[inline]
    pub fn low_branch(&self, n: i64, l: f64) -> bool {
        l < n.unsigned_abs() as f64 / self.ll_threshold
    }
}

/// The weight of `kind` at frequency `n` and dyadic modulation `l >= 1`.
pub fn weight(spec: &WeightSpec, n: i64, l: f64) -> f64 {
    let e = spec.eps;
    let low = spec.low_branch(n, l);
    let jn = bessel_weight(n, 1.0);
    match spec.kind {
        WeightKind::Y if low => l.powf(0.5 + e),
        WeightKind::Y => l.powf(1.0 / 3.0 + e) * jn.powf(1.0 / 3.0 - e),
        WeightKind::Z if low => l.powf(0.5 + e),
        WeightKind::Z => l.powf(2.0 / 3.0 + e),
        WeightKind::Xtilde if low => l.powf(-0.5 + e) * jn.powf(2.0 * spec.s - 1.0 + e),
        WeightKind::Xtilde => l.powf(-1.0 / 3.0 + e),
        WeightKind::Zstar if low => l.powf(-0.5 + e),
        WeightKind::Zstar => l.powf(-1.0 / 3.0 + e),
        WeightKind::Xsb => jn.powf(spec.s) * l.powf(spec.b),
    }
}

/// Index `j` of the annulus `2^j <= x < 2^{j+1}` containing a modulation `x >= 1`.
#[inline]
pub fn dyadic_index(x: f64) -> usize {
    (x.log2().floor().max(0.0) as usize).min(LEVELS - 1)
}

fn check_phase(v: &SpaceTimeField, phase: &PhaseData) -> Result<()> {
    if v.n_max() != phase.n_max() {
        return Err(Error::PhaseMismatch(format!(
            "field truncated at {} but phase computed at {}",
            v.n_max(),
            phase.n_max()
        )));
    }
    Ok(())
}

/// Modulation brackets of every coefficient of mode `n`.
fn mode_brackets(v: &SpaceTimeField, phase: &PhaseData, n: i64) -> impl Iterator<Item = f64> {
    let grid = v.grid();
    let offset = v.frame_of(n) - phase.dispersion_ext(n);
    (0..grid.m).map(move |kidx| bracket(offset + grid.lambda(kidx)))
}

/// `sqrt(sum_L (||w2 v_L||_{L^2} + ||w1 v_L||_{l^2 L^1})^2)`.
fn dyadic_norm(
    v: &SpaceTimeField,
    phase: &PhaseData,
    w2: impl Fn(i64, f64) -> f64 + Sync,
    w1: Option<&(dyn Fn(i64, f64) -> f64 + Sync)>,
) -> Result<f64> {
    check_phase(v, phase)?;
    let measure = 2.0 * v.grid().t_w;
    let per_mode: Vec<([f64; LEVELS], [f64; LEVELS])> = modes(v.n_max())
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let (mut sq, mut l1) = ([0.0; LEVELS], [0.0; LEVELS]);
            for (c, b) in v.mode(n).iter().zip(mode_brackets(v, phase, n)) {
                let j = dyadic_index(b);
                let l = (j as f64).exp2();
                sq[j] += measure * (w2(n, l) * c.norm()).powi(2);
                if let Some(w1) = w1 {
                    l1[j] += w1(n, l) * c.norm();
                }
            }
            (sq, l1)
        })
        .collect();
    let mut total = 0.0;
    for j in 0..LEVELS {
        let a: f64 = per_mode.iter().map(|(sq, _)| sq[j]).sum::<f64>().sqrt();
        let b: f64 = per_mode.iter().map(|(_, l1)| l1[j] * l1[j]).sum::<f64>().sqrt();
        total += (a + b).powi(2);
    }
    Ok(total.sqrt())
}

/// Norm of `v` in the space described by `spec`. `Xsb` uses the exact modulation, not its dyadic level.
pub fn norm(v: &SpaceTimeField, spec: &WeightSpec, phase: &PhaseData) -> Result<f64> {
    let w2 = |n: i64, l: f64| weight(spec, n, l);
    match spec.kind {
        WeightKind::Xsb => norm_xsb(v, phase, spec.s, spec.b),
        WeightKind::Y => dyadic_norm(v, phase, w2, Some(&|_, _| 1.0)),
        WeightKind::Z | WeightKind::Zstar => dyadic_norm(v, phase, w2, None),
        WeightKind::Xtilde => {
            let w1 = |n: i64, l: f64| {
                if spec.low_branch(n, l) {
                    0.0
                } else {
                    bessel_weight(n, 2.0 * spec.s - 1.0 + spec.eps) / l
                }
            };
            dyadic_norm(v, phase, w2, Some(&w1))
        }
    }
}

pub fn norm_y(v: &SpaceTimeField, phase: &PhaseData, eps: f64) -> Result<f64> {
    norm(v, &WeightSpec::new(WeightKind::Y).with_eps(eps), phase)
}

pub fn norm_z(v: &SpaceTimeField, phase: &PhaseData, eps: f64) -> Result<f64> {
    norm(v, &WeightSpec::new(WeightKind::Z).with_eps(eps), phase)
}

pub fn norm_zstar(v: &SpaceTimeField, phase: &PhaseData, eps: f64) -> Result<f64> {
    norm(v, &WeightSpec::new(WeightKind::Zstar).with_eps(eps), phase)
}

pub fn norm_xtilde(v: &SpaceTimeField, phase: &PhaseData, s: f64, eps: f64) -> Result<f64> {
    norm(v, &WeightSpec::new(WeightKind::Xtilde).with_eps(eps).with_s(s), phase)
}

/// `||<n>^s <tau - L_n>^b v||_{L^2}`.
pub fn norm_xsb(v: &SpaceTimeField, phase: &PhaseData, s: f64, b: f64) -> Result<f64> {
    check_phase(v, phase)?;
    let measure = 2.0 * v.grid().t_w;
    let parts: Vec<f64> = modes(v.n_max())
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let jn = bessel_weight(n, 2.0 * s);
            v.mode(n)
                .iter()
                .zip(mode_brackets(v, phase, n))
                .map(|(c, br)| jn * br.powf(2.0 * b) * c.norm_sqr())
                .sum::<f64>()
        })
        .collect();
    Ok((measure * parts.iter().sum::<f64>()).sqrt())
}

/// `min(||v||_Xtilde, ||v||_{X^{2s-1+eps, -1/2+eps}})`.
pub fn norm_x(v: &SpaceTimeField, phase: &PhaseData, s: f64, eps: f64) -> Result<f64> {
    let a = norm_xtilde(v, phase, s, eps)?;
    let b = norm_xsb(v, phase, 2.0 * s - 1.0 + eps, -0.5 + eps)?;
    Ok(a.min(b))
}

/// Splits `v` into its modulation annuli. Returns `(L, v_L)` for every nonempty annulus.
pub fn dyadic_partition(v: &SpaceTimeField, phase: &PhaseData) -> Result<Vec<(f64, SpaceTimeField)>> {
    check_phase(v, phase)?;
    let mut pieces: Vec<Option<SpaceTimeField>> = vec![None; LEVELS];
    for n in modes(v.n_max()) {
        for (kidx, (c, b)) in v.mode(n).iter().zip(mode_brackets(v, phase, n)).enumerate() {
            let piece = pieces[dyadic_index(b)]
                .get_or_insert_with(|| SpaceTimeField::zeros(v.n_max(), v.grid(), v.frame().to_vec()));
            piece.mode_mut(n)[kidx] = *c;
        }
    }
    Ok(pieces
        .into_iter()
        .enumerate()
        .filter_map(|(j, p)| p.map(|p| ((j as f64).exp2(), p)))
        .collect())
}

/// Largest `weight(num) / weight(den)` over `1 <= |n| <= n_max` and `L = 1, 2, ..., 2^levels`.
pub fn weight_ratio_sup(num: &WeightSpec, den: &WeightSpec, n_max: i64, levels: u32) -> f64 {
    let mut worst = 0.0f64;
    for n in 1..=n_max {
        for j in 0..=levels {
            let l = (j as f64).exp2();
            worst = worst.max(weight(num, n, l) / weight(den, n, l));
        }
    }
    worst
}

/// Normalized `L^p(T_t x T_x)` norm of `sum_{Nd <= n < 2Nd} g_n e^{i(n x + L_n t)}`
/// over the positive frequencies of `g`, divided by their `l^2` norm.
///
/// The spatial integral is exact. The time average over `[0, 2pi]` is exact between
/// tuples sharing `(sum n, sum n^3)`; across such groups the phase corrections
/// `L_n - n^3` are treated as orthogonal, which is exact when `phi = 0`.
pub fn strichartz_ratio(g: &SpectralField, phase: &PhaseData, p: u32, nd: usize) -> Result<f64> {
    let q = match p {
        4 => 2,
        6 => 3,
        other => return Err(Error::UnsupportedExponent(other)),
    };
    if nd == 0 {
        return Err(Error::EmptyBlock(nd));
    }
    let block: Vec<(i64, Complex64, f64)> = (nd as i64..2 * nd as i64)
        .filter(|&n| n as usize <= g.n_max())
        .map(|n| (n, g.get(n), phase.dispersion_ext(n) - (n * n * n) as f64))
        .filter(|(_, c, _)| c.norm_sqr() > 0.0)
        .collect();
    if block.is_empty() {
        return Err(Error::EmptyBlock(nd));
    }
    let l2: f64 = block.iter().map(|(_, c, _)| c.norm_sqr()).sum::<f64>().sqrt();
    // key: (sum n, sum n^3, rounded phase correction)
    let mut groups: HashMap<(i64, i64, i64), (f64, Complex64)> = HashMap::new();
    let mut add = |idx: &[usize]| {
        let (mut a, mut b, mut d, mut c) = (0i64, 0i64, 0.0f64, Complex64::new(1.0, 0.0));
        for &i in idx {
            let (n, g, delta) = block[i];
            a += n;
            b += n * n * n;
            d += delta;
            c *= g;
        }
        let key = (a, b, (d * 1e12).round() as i64);
        let e = groups.entry(key).or_insert((d, Complex64::new(0.0, 0.0)));
        e.1 += c;
    };
    let len = block.len();
    for i in 0..len {
        for j in 0..len {
            if q == 2 {
                add(&[i, j]);
            } else {
                for k in 0..len {
                    add(&[i, j, k]);
                }
            }
        }
    }
    let mut keys: Vec<_> = groups.keys().copied().collect();
    keys.sort_unstable();
    let mut total = 0.0;
    let mut start = 0;
    while start < keys.len() {
        let head = (keys[start].0, keys[start].1);
        let mut end = start;
        while end < keys.len() && (keys[end].0, keys[end].1) == head {
            end += 1;
        }
        let members: Vec<(f64, Complex64)> = keys[start..end].iter().map(|k| groups[k]).collect();
        for (dj, cj) in &members {
            for (dk, ck) in &members {
                total += (cj * ck.conj() * period_average(dj - dk)).re;
            }
        }
        start = end;
    }
    Ok(total.max(0.0).powf(1.0 / p as f64) / l2)
}

/// `(1 / 2pi) int_0^{2pi} e^{i w t} dt`.
fn period_average(w: f64) -> Complex64 {
    let x = 2.0 * std::f64::consts::PI * w;
    if x.abs() < 1e-8 {
        Complex64::new(1.0, x / 2.0)
    } else {
        (Complex64::from_polar(1.0, x) - 1.0) / Complex64::new(0.0, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmbeddingTarget {
    L4,
    L6,
    Xsb { s: f64, b: f64 },
}

/// `||v||_target / ||v||_from`.
pub fn embedding_ratio(v: &SpaceTimeField, from: &WeightSpec, to: EmbeddingTarget, phase: &PhaseData) -> Result<f64> {
    let den = norm(v, from, phase)?;
    if den == 0.0 {
        return Err(Error::DivisionByZeroNorm);
    }
    let num = match to {
        EmbeddingTarget::L4 => lebesgue_norm(v, 4)?,
        EmbeddingTarget::L6 => lebesgue_norm(v, 6)?,
        EmbeddingTarget::Xsb { s, b } => norm_xsb(v, phase, s, b)?,
    };
    Ok(num / den)
}

/// One line of a norm report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub norm_kind: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T_w")]
    pub t_w: f64,
    pub eps: f64,
    pub value: f64,
}

/// The `Y`, `Z`, `Z*`, `Xtilde`, `X` and `L^2` norms of `v` as report rows.
pub fn norm_report(v: &SpaceTimeField, phase: &PhaseData, s: f64, eps: f64) -> Result<Vec<NormRow>> {
    let row = |kind: &str, value: f64| NormRow {
        norm_kind: kind.to_string(),
        n: v.n_max(),
        t_w: v.grid().t_w,
        eps,
        value,
    };
    Ok(vec![
        row("Y", norm_y(v, phase, eps)?),
        row("Z", norm_z(v, phase, eps)?),
        row("Zstar", norm_zstar(v, phase, eps)?),
        row("Xtilde", norm_xtilde(v, phase, s, eps)?),
        row("X", norm_x(v, phase, s, eps)?),
        row("L2", v.l2_norm()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{compute_phi, free_evolution};
    use crate::spacetime::{st_transform, TimeGrid, Window};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weight_values() {
        for n in [1, 5, 100, 1000] {
            assert_eq!(weight(&WeightSpec::new(WeightKind::Z), n, 1.0), 1.0);
        }
        for n in [9, 100, 1000] {
            assert_eq!(weight(&WeightSpec::new(WeightKind::Y), n, 1.0), 1.0);
        }
        // below the branch threshold the frequency factor survives at L = 1
        let y1 = weight(&WeightSpec::new(WeightKind::Y), 5, 1.0);
        assert!((y1 - 26f64.powf(0.5 * (1.0 / 3.0 - DEFAULT_EPS))).abs() < 1e-14);
        let y = WeightSpec::new(WeightKind::Y).with_eps(0.0);
        assert!((weight(&y, 100, 4.0) - 2.0).abs() < 1e-15);
        let z = WeightSpec::new(WeightKind::Z).with_eps(0.0);
        assert!((weight(&z, 2, 64.0) - 16.0).abs() < 1e-12);
        let zs = WeightSpec::new(WeightKind::Zstar);
        for (n, l) in [(3, 1.0), (100, 2.0), (100, 1024.0)] {
            let ratio = weight(&zs, n, l) * l / weight(&WeightSpec::new(WeightKind::Z), n, l);
            assert!((ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dyadic_levels() {
        assert_eq!(dyadic_index(1.0), 0);
        assert_eq!(dyadic_index(1.99), 0);
        assert_eq!(dyadic_index(2.0), 1);
        assert_eq!(dyadic_index(1000.0), 9);
    }

    fn sample(seed: u64) -> (SpaceTimeField, PhaseData) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = SpectralField::random(8, &mut rng, |n| 1.0 / n as f64);
        let phase = compute_phi(&f, 0.55);
        let grid = TimeGrid::new(2.0, 64).unwrap();
        let x = free_evolution(&f, &phase, grid, &Window::flat_everywhere());
        let v = st_transform(&x, &Window::default().dilated(2.0), phase.frame(8)).unwrap();
        (v, phase)
    }

    #[test]
    fn zero_field_and_homogeneity() {
        let (v, phase) = sample(3);
        let zero = v.scale(0.0);
        for kind in [WeightKind::Y, WeightKind::Z, WeightKind::Zstar, WeightKind::Xtilde, WeightKind::Xsb] {
            let spec = WeightSpec::new(kind).with_s(0.6).with_b(0.4);
            assert_eq!(norm(&zero, &spec, &phase).unwrap(), 0.0);
            let a = norm(&v, &spec, &phase).unwrap();
            let b = norm(&v.scale(-2.5), &spec, &phase).unwrap();
            assert!((b - 2.5 * a).abs() < 1e-12 * b, "{kind:?}");
        }
    }

    #[test]
    fn partition_is_complete() {
        let (v, phase) = sample(4);
        let pieces = dyadic_partition(&v, &phase).unwrap();
        let total: f64 = pieces.iter().map(|(_, p)| p.l2_norm().powi(2)).sum();
        assert!((total - v.l2_norm().powi(2)).abs() < 1e-12 * total);
        assert!((norm_xsb(&v, &phase, 0.0, 0.0).unwrap() - v.l2_norm()).abs() < 1e-12);
        let sum = pieces.iter().skip(1).fold(pieces[0].1.clone(), |acc, (_, p)| acc.add(p).unwrap());
        assert_eq!(sum.sub(&v).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn phase_mismatch_is_reported() {
        let (v, _) = sample(5);
        let other = PhaseData::zero(4, 0.5);
        assert!(matches!(norm_y(&v, &other, 0.01), Err(Error::PhaseMismatch(_))));
    }

    #[test]
    fn single_mode_strichartz() {
        let g = SpectralField::from_positive(16, |n| if n == 11 { Complex64::new(0.3, 0.4) } else { Complex64::new(0.0, 0.0) });
        let phase = compute_phi(&g, 0.5);
        for p in [4, 6] {
            assert!((strichartz_ratio(&g, &phase, p, 8).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(strichartz_ratio(&g, &phase, 6, 4), Err(Error::EmptyBlock(4)));
        assert_eq!(strichartz_ratio(&g, &phase, 5, 8), Err(Error::UnsupportedExponent(5)));
    }

    #[test]
    fn two_mode_l4_by_hand() {
        // |a e1 + b e2|^4 averages to |a|^4 + |b|^4 + 4|a|^2|b|^2
        let g = SpectralField::from_positive(16, |n| match n {
            9 => Complex64::new(1.0, 0.0),
            12 => Complex64::new(0.0, 2.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let phase = PhaseData::zero(16, 0.5);
        let expect = (1.0f64 + 16.0 + 16.0).powf(0.25) / 5f64.sqrt();
        assert!((strichartz_ratio(&g, &phase, 4, 8).unwrap() - expect).abs() < 1e-12);
    }
}
