//! Brute-force suprema of the weighted multiplier ratios behind the trilinear
//! and quadrilinear estimates.
//!
//! Every ratio is evaluated in logarithmic form from lookup tables, so a scan
//! costs a handful of additions per frequency tuple. Modulations enter at their
//! smallest admissible dyadic level: when the estimate only knows `L >= <H>`,
//! the scan uses `L = 2^floor(log2 <H>)`, which is where a negative power of `L`
//! is largest.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::{h3, h4};

/// `a >> b` means `a >= SEPARATION * b`; `a ~ b` means neither dominates.
pub const SEPARATION: i64 = 8;
/// Largest truncation a scan accepts.
pub const MAX_SCAN_NMAX: usize = 256;
/// Smallest truncation a scan accepts, also the first fitting scale.
pub const MIN_SCAN_NMAX: usize = 16;

/// One multiplier ratio and the frequency region it is scanned over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolCase {
    #[serde(rename = "sym1-1A")]
    Sym1Case1A,
    #[serde(rename = "sym12-1A")]
    Sym12Case1A,
    #[serde(rename = "sym2-1B")]
    Sym2Case1B,
    #[serde(rename = "sym1-2A")]
    Sym1Case2A,
    #[serde(rename = "sym12-2A")]
    Sym12Case2A,
    #[serde(rename = "sym2-2B")]
    Sym2Case2B,
    #[serde(rename = "sym2-3B-v")]
    Sym2Case3BV,
    #[serde(rename = "quad-3Bi")]
    Quad3Bi,
    #[serde(rename = "quad-3Bii")]
    Quad3Bii,
    #[serde(rename = "quad-3Biii")]
    Quad3Biii,
    #[serde(rename = "Nh")]
    Nh,
    #[serde(rename = "Rh")]
    Rh,
    #[serde(rename = "case3-unrestricted")]
    Case3Unrestricted,
}

impl SymbolCase {
    pub const ALL: [SymbolCase; 13] = [
        SymbolCase::Sym1Case1A,
        SymbolCase::Sym12Case1A,
        SymbolCase::Sym2Case1B,
        SymbolCase::Sym1Case2A,
        SymbolCase::Sym12Case2A,
        SymbolCase::Sym2Case2B,
        SymbolCase::Sym2Case3BV,
        SymbolCase::Quad3Bi,
        SymbolCase::Quad3Bii,
        SymbolCase::Quad3Biii,
        SymbolCase::Nh,
        SymbolCase::Rh,
        SymbolCase::Case3Unrestricted,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SymbolCase::Sym1Case1A => "sym1-1A",
            SymbolCase::Sym12Case1A => "sym12-1A",
            SymbolCase::Sym2Case1B => "sym2-1B",
            SymbolCase::Sym1Case2A => "sym1-2A",
            SymbolCase::Sym12Case2A => "sym12-2A",
            SymbolCase::Sym2Case2B => "sym2-2B",
            SymbolCase::Sym2Case3BV => "sym2-3B-v",
            SymbolCase::Quad3Bi => "quad-3Bi",
            SymbolCase::Quad3Bii => "quad-3Bii",
            SymbolCase::Quad3Biii => "quad-3Biii",
            SymbolCase::Nh => "Nh",
            SymbolCase::Rh => "Rh",
            SymbolCase::Case3Unrestricted => "case3-unrestricted",
        }
    }

    /// Whether the ratio is expected to stay bounded as the truncation grows.
    pub fn bounded(self) -> bool {
        self != SymbolCase::Case3Unrestricted
    }

    /// Number of free frequency coordinates in the scan.
    pub fn dims(self) -> usize {
        match self {
            SymbolCase::Nh | SymbolCase::Rh => 2,
            SymbolCase::Quad3Bi | SymbolCase::Case3Unrestricted => 3,
            SymbolCase::Quad3Bii | SymbolCase::Quad3Biii => 4,
            _ => 3,
        }
    }

    /// Meaning of the scan coordinates, for reports.
    pub fn coordinates(self) -> &'static str {
        match self {
            SymbolCase::Nh => "(n1, n2)",
            SymbolCase::Rh => "(n, n3)",
            SymbolCase::Quad3Bi | SymbolCase::Case3Unrestricted => "(n1, n2, n4) with n3 = -n1",
            SymbolCase::Quad3Bii | SymbolCase::Quad3Biii => "(n1, n2, n3, n4)",
            _ => "(n1, n2, n3)",
        }
    }
}

impl fmt::Display for SymbolCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SymbolCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SymbolCase::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown case id {s:?}")))
    }
}

/// Supremum of one ratio over its region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolReport {
    pub case_id: SymbolCase,
    pub s: f64,
    pub eps: f64,
    #[serde(rename = "Nmax")]
    pub n_max: usize,
    pub sup_ratio: f64,
    /// Scan coordinates of the supremum, see [`SymbolCase::coordinates`].
    pub argmax: Vec<i64>,
    /// Least-squares slope of `log sup` against `log M` over the scales below.
    pub fit_exponent: Option<f64>,
    /// `(M, sup over max |n_i| <= M)`.
    pub scale_sups: Vec<(usize, f64)>,
}

impl SymbolReport {
    /// Relative change of the supremum between scale `m` and the full scan.
    pub fn relative_change_from(&self, m: usize) -> Option<f64> {
        let at = self.scale_sups.iter().find(|(k, _)| *k == m)?.1;
        Some((self.sup_ratio - at).abs() / at)
    }
}

/// `ln <k>` and `ln |k|` for `|k| <= kmax`.
struct LogTables {
    bracket: Vec<f64>,
    abs: Vec<f64>,
}

impl LogTables {
    fn new(kmax: usize) -> Self {
        Self {
            bracket: (0..=kmax).map(|k| 0.5 * (1.0 + (k * k) as f64).ln()).collect(),
            abs: (0..=kmax).map(|k| if k == 0 { f64::NEG_INFINITY } else { (k as f64).ln() }).collect(),
        }
    }

    #[inline]
    fn lb(&self, k: i64) -> f64 {
        self.bracket[k.unsigned_abs() as usize]
    }

    #[inline]
    fn la(&self, k: i64) -> f64 {
        self.abs[k.unsigned_abs() as usize]
    }
}

/// `ln 2^floor(log2 <x>)` for an integer `x`.
#[inline]
pub(crate) fn ln_dyadic_floor(x: i64) -> f64 {
    let a = x.unsigned_abs();
    if a == 0 {
        0.0
    } else {
        a.ilog2() as f64 * std::f64::consts::LN_2
    }
}

/// `ln 2^floor(log2 x)` for a real `x >= 1`.
#[inline]
pub(crate) fn ln_dyadic_floor_real(x: f64) -> f64 {
    x.max(1.0).log2().floor() * std::f64::consts::LN_2
}

#[inline]
fn dominates(a: i64, b: i64) -> bool {
    a.abs() >= SEPARATION * b.abs()
}

#[inline]
fn comparable(a: i64, b: i64) -> bool {
    let (a, b) = (a.abs().max(1), b.abs().max(1));
    a < SEPARATION * b && b < SEPARATION * a
}

#[inline]
fn case1(n1: i64, n2: i64, n3: i64) -> bool {
    dominates(n1, n2.abs().max(n3.abs()))
}

#[inline]
fn case2(n1: i64, n2: i64, n3: i64) -> bool {
    comparable(n1, n2) && comparable(n2, n3) && comparable(n1, n3)
}

#[inline]
fn case3(n1: i64, n2: i64, n3: i64) -> bool {
    comparable(n1, n2) && dominates(n1.abs().min(n2.abs()), n3)
}

/// Evaluates one case's log-ratio at a frequency tuple.
pub(crate) struct RatioEval {
    case: SymbolCase,
    s: f64,
    eps: f64,
    t: LogTables,
    /// Extra modulation gain `ln L(N, n2)` for the cancellation scan, indexed by `(N, n2)`.
    gain: Option<(usize, Vec<f64>)>,
}

impl RatioEval {
    pub(crate) fn new(case: SymbolCase, s: f64, eps: f64, n_max: usize) -> Self {
        Self {
            case,
            s,
            eps,
            t: LogTables::new(4 * n_max + 4),
            gain: None,
        }
    }

    /// Replaces the `N^2 |n2|` lower bound of the cancellation case by a measured table.
    pub(crate) fn with_gain(mut self, n_max: usize, gain: Vec<f64>) -> Self {
        self.gain = Some((n_max, gain));
        self
    }

    fn sigma_m(&self, n1: i64, n2: i64, n3: i64, n: i64) -> f64 {
        let t = &self.t;
        self.s * (t.lb(n1) + t.lb(n2) + t.lb(n3)) - t.la(n3) - self.s * t.lb(n)
    }

    fn trilinear(&self, c: &[i64]) -> Option<f64> {
        let (n1, n2, n3) = (c[0], c[1], c[2]);
        let n = n1 + n2 + n3;
        if n1 == 0 || n2 == 0 || n3 == 0 || n == 0 {
            return None;
        }
        let inside = match self.case {
            SymbolCase::Sym1Case1A | SymbolCase::Sym12Case1A | SymbolCase::Sym2Case1B => case1(n1, n2, n3),
            SymbolCase::Sym1Case2A | SymbolCase::Sym12Case2A | SymbolCase::Sym2Case2B => case2(n1, n2, n3),
            _ => case3(n1, n2, n3),
        };
        let h = h3(n1, n2, n3);
        if !inside || h == 0 {
            return None;
        }
        let (t, s, e) = (&self.t, self.s, self.eps);
        let sig = self.sigma_m(n1, n2, n3, n);
        let ll = ln_dyadic_floor(h);
        Some(match self.case {
            SymbolCase::Sym1Case1A | SymbolCase::Sym1Case2A => sig - (1.0 / 3.0 - e) * ll,
            SymbolCase::Sym12Case1A | SymbolCase::Sym12Case2A => {
                let pair = t.lb(n1 + n2).min(t.lb(n2 + n3)).min(t.lb(n1 + n3));
                (2.0 * s - 1.0 + e) * t.lb(n) + sig - ll + (1.0 + e) * pair
            }
            SymbolCase::Sym2Case1B | SymbolCase::Sym2Case2B => {
                let big = t.lb(n1).max(t.lb(n2)).max(t.lb(n3));
                t.lb(n) / 3.0 + sig - (1.0 / 3.0 - e) * (big + ll)
            }
            _ => t.lb(n) / 3.0 + sig - (2.0 / 3.0 - e) * ll,
        })
    }

    /// `<n>^{1/3} |sigma(M1)| <n_min>^{1/2 + eps}` in logs.
    fn quad_base(&self, n1: i64, n2: i64, n3: i64, n4: i64, n: i64) -> f64 {
        let (t, s) = (&self.t, self.s);
        let lmin = t.lb(n1).min(t.lb(n2)).min(t.lb(n3)).min(t.lb(n4));
        t.lb(n) / 3.0 + s * (t.lb(n1) + t.lb(n2) + t.lb(n3) + t.lb(n4)) - t.la(n1) - t.la(n2) - t.la(n4) - s * t.lb(n)
            + (0.5 + self.eps) * lmin
    }

    fn quadrilinear(&self, c: &[i64]) -> Option<f64> {
        let (n1, n2, n3, n4) = match self.case {
            SymbolCase::Quad3Bi | SymbolCase::Case3Unrestricted => (c[0], c[1], -c[0], c[2]),
            _ => (c[0], c[1], c[2], c[3]),
        };
        let n = n1 + n2 + n3 + n4;
        if n1 == 0 || n2 == 0 || n3 == 0 || n4 == 0 || n == 0 || n1 + n2 == 0 || n1 + n2 + n3 == 0 {
            return None;
        }
        if !(comparable(n1 + n2, n3) && dominates(n3, n4)) {
            return None;
        }
        let inside = match self.case {
            SymbolCase::Quad3Biii => case2(n1, n2, n3),
            _ => {
                let small = n2.abs().max(n4.abs());
                comparable(n1, n3) && dominates(n1.abs().min(n3.abs()), small) && ((n1 + n3 == 0) == (self.case != SymbolCase::Quad3Bii))
            }
        };
        if !inside {
            return None;
        }
        let base = self.quad_base(n1, n2, n3, n4, n);
        let gain = match self.case {
            SymbolCase::Quad3Biii => 0.0,
            SymbolCase::Quad3Bi => match &self.gain {
                Some((nm, table)) => table[gain_index(*nm, n1, n2)],
                None => ln_dyadic_floor(n1 * n1 * n2),
            },
            _ => ln_dyadic_floor(h4(n1, n2, n3, n4)),
        };
        Some(base - (1.0 / 3.0 + self.eps) * gain)
    }

    fn bilinear(&self, c: &[i64]) -> Option<f64> {
        let (t, s, e) = (&self.t, self.s, self.eps);
        match self.case {
            SymbolCase::Nh => {
                let (n1, n2) = (c[0], c[1]);
                let n = n1 + n2;
                if n1 == 0 || n2 == 0 || n == 0 {
                    return None;
                }
                let sigma = t.la(n) + s * (t.lb(n1) + t.lb(n2)) - s * t.lb(n);
                let ll = ln_dyadic_floor(n * n1 * n2);
                let g1 = 2.0 * (1.0 / 3.0 + e) * ll + (1.0 / 3.0 - e) * (t.lb(n1) + t.lb(n2));
                let g2 = (0.5 - e) * ll + (1.0 / 3.0 + e) * ll + (1.0 / 3.0 - e) * t.lb(n1).min(t.lb(n2));
                let lmin = t.lb(n).min(t.lb(n1)).min(t.lb(n2));
                Some((2.0 * s - 1.0 + e) * t.lb(n) + sigma + (0.5 + e) * lmin - g1.min(g2))
            }
            _ => {
                let (n, n3) = (c[0], c[1]);
                if n == 0 || n3 == 0 || n == n3 {
                    return None;
                }
                let ll = ln_dyadic_floor(n * (n - n3) * n3);
                Some(t.lb(n) / 3.0 + 2.0 * s * t.lb(n3) - t.la(n3) - (1.0 / 3.0 - e) * ll)
            }
        }
    }

    /// Log of the ratio at scan coordinates `c`, `None` outside the region.
    pub(crate) fn log_ratio(&self, c: &[i64]) -> Option<f64> {
        match self.case {
            SymbolCase::Nh | SymbolCase::Rh => self.bilinear(c),
            SymbolCase::Quad3Bi | SymbolCase::Quad3Bii | SymbolCase::Quad3Biii | SymbolCase::Case3Unrestricted => {
                self.quadrilinear(c)
            }
            _ => self.trilinear(c),
        }
    }

    /// Whether a tile with absolute coordinate ranges `[lo_i, hi_i]` can meet the region.
    fn tile_possible(&self, lo: &[i64], hi: &[i64]) -> bool {
        let can_dominate = |a: usize, b: usize| hi[a] >= SEPARATION * lo[b];
        let can_compare = |a: usize, b: usize| lo[a] < SEPARATION * hi[b].max(1) && lo[b] < SEPARATION * hi[a].max(1);
        match self.case {
            SymbolCase::Sym1Case1A | SymbolCase::Sym12Case1A | SymbolCase::Sym2Case1B => {
                can_dominate(0, 1) && can_dominate(0, 2)
            }
            SymbolCase::Sym1Case2A | SymbolCase::Sym12Case2A | SymbolCase::Sym2Case2B => {
                can_compare(0, 1) && can_compare(1, 2) && can_compare(0, 2)
            }
            SymbolCase::Sym2Case3BV => can_compare(0, 1) && can_dominate(0, 2) && can_dominate(1, 2),
            SymbolCase::Quad3Bi | SymbolCase::Case3Unrestricted => can_dominate(0, 1) && can_dominate(0, 2),
            SymbolCase::Quad3Bii => {
                can_compare(0, 2) && can_dominate(0, 1) && can_dominate(0, 3) && can_dominate(2, 1) && can_dominate(2, 3)
            }
            SymbolCase::Quad3Biii => can_compare(0, 1) && can_compare(1, 2) && can_compare(0, 2) && can_dominate(2, 3),
            SymbolCase::Nh | SymbolCase::Rh => true,
        }
    }
}

pub(crate) fn gain_index(n_max: usize, n1: i64, n2: i64) -> usize {
    let w = 2 * n_max + 1;
    (n1 + n_max as i64) as usize * w + (n2 + n_max as i64) as usize
}

/// Fitting scales `16, 32, ...` below `n_max`, then `n_max`.
pub fn scan_scales(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = MIN_SCAN_NMAX;
    while m < n_max {
        out.push(m);
        m *= 2;
    }
    out.push(n_max);
    out
}

type Best = Option<(f64, Vec<i64>)>;

/// Larger value wins; equal values go to the lexicographically smaller tuple.
fn better(candidate: (f64, &[i64]), current: &Best) -> bool {
    match current {
        None => true,
        Some((v, arg)) => candidate.0 > *v || (candidate.0 == *v && candidate.1 < arg.as_slice()),
    }
}

fn merge(into: &mut [Best], from: Vec<Best>) {
    for (slot, b) in into.iter_mut().zip(from) {
        if let Some((v, arg)) = b {
            if better((v, &arg), slot) {
                *slot = Some((v, arg));
            }
        }
    }
}

/// Tiled scan of `[-n_max, n_max]^d`; returns the best log-ratio per scale bin.
///
/// Tiles are `32^d` for `d <= 3` and `16^4` otherwise. Each tile is scanned
/// sequentially and the per-tile maxima are merged in tile order, so the result
/// does not depend on the number of worker threads.
pub(crate) fn tiled_scan(eval: &RatioEval, n_max: usize, scales: &[usize]) -> Vec<Best> {
    let d = eval.case.dims();
    let side = if d <= 3 { 32 } else { 16 };
    let nm = n_max as i64;
    let starts: Vec<i64> = (-nm..=nm).step_by(side).collect();
    let per_axis = starts.len();
    let n_tiles = per_axis.pow(d as u32);
    let bin_of = |m: i64| scales.iter().position(|&s| m <= s as i64).unwrap_or(scales.len() - 1);
    let tiles: Vec<Vec<Best>> = (0..n_tiles)
        .into_par_iter()
        .map(|tile| {
            let mut best: Vec<Best> = vec![None; scales.len()];
            let mut lo = vec![0i64; d];
            let mut hi = vec![0i64; d];
            let mut range = Vec::with_capacity(d);
            let mut rest = tile;
            let mut idx = vec![0usize; d];
            for axis in (0..d).rev() {
                idx[axis] = rest % per_axis;
                rest /= per_axis;
            }
            for axis in 0..d {
                let a = starts[idx[axis]];
                let b = (a + side as i64 - 1).min(nm);
                range.push((a, b));
                let (alo, ahi) = if a <= 0 && b >= 0 { (0, a.abs().max(b.abs())) } else { (a.abs().min(b.abs()), a.abs().max(b.abs())) };
                lo[axis] = alo;
                hi[axis] = ahi;
            }
            if !eval.tile_possible(&lo, &hi) {
                return best;
            }
            let mut c: Vec<i64> = range.iter().map(|r| r.0).collect();
            loop {
                if let Some(v) = eval.log_ratio(&c) {
                    let bin = bin_of(c.iter().map(|x| x.abs()).max().unwrap_or(0));
                    if better((v, &c), &best[bin]) {
                        best[bin] = Some((v, c.clone()));
                    }
                }
                let mut axis = d;
                loop {
                    if axis == 0 {
                        return best;
                    }
                    axis -= 1;
                    if c[axis] < range[axis].1 {
                        c[axis] += 1;
                        break;
                    }
                    c[axis] = range[axis].0;
                }
            }
        })
        .collect();
    let mut out: Vec<Best> = vec![None; scales.len()];
    for t in tiles {
        merge(&mut out, t);
    }
    out
}

pub(crate) fn check_scan_params(s: f64, eps: f64, n_max: usize) -> Result<()> {
    if !(0.5..2.0 / 3.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [1/2, 2/3)")));
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 0.1)")));
    }
    if n_max < MIN_SCAN_NMAX {
        return Err(Error::EmptyRegion(format!("Nmax = {n_max} below {MIN_SCAN_NMAX}")));
    }
    if n_max > MAX_SCAN_NMAX {
        return Err(Error::InvalidParameter(format!("Nmax = {n_max} above {MAX_SCAN_NMAX}")));
    }
    Ok(())
}

pub(crate) fn report_from(case: SymbolCase, s: f64, eps: f64, n_max: usize, scales: &[usize], bins: Vec<Best>) -> Result<SymbolReport> {
    let mut scale_sups = Vec::new();
    let mut running: Best = None;
    for (&m, b) in scales.iter().zip(bins) {
        if let Some((v, arg)) = b {
            if better((v, &arg), &running) {
                running = Some((v, arg));
            }
        }
        if let Some((v, _)) = &running {
            scale_sups.push((m, v.exp()));
        }
    }
    let (best, argmax) = running.ok_or_else(|| Error::EmptyRegion(format!("{case} has no admissible tuple at Nmax = {n_max}")))?;
    Ok(SymbolReport {
        case_id: case,
        s,
        eps,
        n_max,
        sup_ratio: best.exp(),
        argmax,
        fit_exponent: fit_slope(&scale_sups),
        scale_sups,
    })
}

/// Least-squares slope of `ln y` against `ln x`; needs two distinct points.
pub fn fit_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Scans `case` over `|n_i| <= n_max` and reports the supremum of its ratio.
pub fn audit_symbol(case: SymbolCase, s: f64, eps: f64, n_max: usize) -> Result<SymbolReport> {
    check_scan_params(s, eps, n_max)?;
    let eval = RatioEval::new(case, s, eps, n_max);
    let scales = scan_scales(n_max);
    let bins = tiled_scan(&eval, n_max, &scales);
    report_from(case, s, eps, n_max, &scales, bins)
}

/// The ratio of `case` at one tuple of scan coordinates, `None` outside its region.
pub fn symbol_ratio(case: SymbolCase, s: f64, eps: f64, coords: &[i64]) -> Option<f64> {
    if coords.len() != case.dims() {
        return None;
    }
    let reach = coords.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0);
    RatioEval::new(case, s, eps, reach.max(1)).log_ratio(coords).map(f64::exp)
}
