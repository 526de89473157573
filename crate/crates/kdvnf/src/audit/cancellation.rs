//! Lattice check of the symmetrized cutoff difference in the `n1 + n3 = 0` interaction.
//!
//! After averaging the two orderings of `(N, -N)`, the middle factor carries
//! `chi(n2, tau2; N) - chi(n2, tau2; -N)`. Both cutoffs equal 1 below their
//! thresholds `c |(n2 +- N) n2 N|`, so the difference can only be nonzero once
//! `<tau2 - L_{n2}>` exceeds the smaller one, which is of size `N^2 |n2|`.

use serde::{Deserialize, Serialize};

use super::symbols::{check_scan_params, gain_index, ln_dyadic_floor_real, report_from, scan_scales, tiled_scan, RatioEval, SymbolCase, SymbolReport, SEPARATION};
use crate::error::Result;
use crate::multipliers::{bracket, ChiSpec};

/// Half-width of the time window whose frequency lattice `k pi / T_w` is checked.
pub const LATTICE_T_W: f64 = 2.0;
/// A measured constant below this counts as a violation.
pub const VIOLATION_CONSTANT: f64 = 1.0 / 8.0;

/// `chi(n2, .; big) - chi(n2, .; -big)` at bracketed modulation `b`.
pub fn chi_difference(spec: &ChiSpec, n2: i64, big: i64, b: f64) -> f64 {
    spec.weight(b, n2, big) - spec.weight(b, n2, -big)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadCancellationReport {
    /// Weighted symbol supremum with the measured modulation gain applied.
    pub symbol: SymbolReport,
    /// `min L2 / (N^2 |n2|)` over lattice points with a nonzero difference.
    pub c_measured: f64,
    /// `(N, n2)` attaining `c_measured`.
    pub c_argmin: (i64, i64),
    /// Pairs where a nonzero difference occurs below `N^2 |n2| / 8`.
    pub violations: usize,
    pub pairs: usize,
    pub threshold_const: f64,
    pub ramp_ratio: f64,
}

/// First lattice index `k >= 0` with `pred(<k d>)`, searching upward from below `x0`.
///
/// Below `x0` the predicate is known to fail, which makes the search exact.
fn first_lattice_point(x0: f64, d: f64, pred: impl Fn(f64) -> bool) -> Option<(usize, f64)> {
    let below = ((x0 * x0 - 1.0).max(0.0).sqrt() / d).floor() as usize;
    let mut k = below.saturating_sub(2);
    let limit = below * 8 + 64;
    while k <= limit {
        let b = bracket(k as f64 * d);
        if pred(b) {
            return Some((k, b));
        }
        k += 1;
    }
    None
}

/// Smallest modulations at which the two cutoff factors of the interaction switch on.
fn pair_minima(spec: &ChiSpec, big: i64, n2: i64, d: f64) -> (f64, f64) {
    let t_low = spec.threshold(n2, big).min(spec.threshold(n2, -big));
    let (_, b2) = first_lattice_point(t_low, d, |b| chi_difference(spec, n2, big, b) != 0.0).expect("difference switches on before the ramp ends");
    let t3 = spec.threshold(-big, n2);
    let (_, b3) = first_lattice_point(t3, d, |b| spec.weight(b, -big, n2) < 1.0).expect("cutoff drops before the ramp ends");
    (b2, b3)
}

/// Scans all `(N, n2)` with `|N| <= n_max`, `|N| >= 8 |n2|` on the lattice and
/// reports the modulation constant and the weighted symbol with that gain.
pub fn audit_quad_cancellation(s: f64, eps: f64, n_max: usize, spec: &ChiSpec) -> Result<QuadCancellationReport> {
    check_scan_params(s, eps, n_max)?;
    let d = std::f64::consts::PI / LATTICE_T_W;
    let nm = n_max as i64;
    let w = 2 * n_max + 1;
    let mut gain = vec![0.0; w * w];
    let (mut c_min, mut c_arg) = (f64::INFINITY, (0, 0));
    let (mut violations, mut pairs) = (0, 0);
    for big in -nm..=nm {
        for n2 in -nm..=nm {
            if n2 == 0 || big.abs() < SEPARATION * n2.abs() {
                continue;
            }
            pairs += 1;
            let (b2, b3) = pair_minima(spec, big, n2, d);
            let scale = (big * big * n2.abs()) as f64;
            let c = b2 / scale;
            if c < c_min {
                c_min = c;
                c_arg = (big, n2);
            }
            if c < VIOLATION_CONSTANT {
                violations += 1;
            }
            gain[gain_index(n_max, big, n2)] = ln_dyadic_floor_real(b2.min(b3));
        }
    }
    let eval = RatioEval::new(SymbolCase::Quad3Bi, s, eps, n_max).with_gain(n_max, gain);
    let scales = scan_scales(n_max);
    let bins = tiled_scan(&eval, n_max, &scales);
    Ok(QuadCancellationReport {
        symbol: report_from(SymbolCase::Quad3Bi, s, eps, n_max, &scales, bins)?,
        c_measured: c_min,
        c_argmin: c_arg,
        violations,
        pairs,
        threshold_const: spec.threshold_const,
        ramp_ratio: spec.ramp_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::ChiMode;
    use crate::phase::PhaseData;

    fn spec() -> ChiSpec {
        ChiSpec::new(PhaseData::zero(8, 0.6))
    }

    #[test]
    fn difference_vanishes_without_restriction() {
        let one = spec().with_mode(ChiMode::One);
        for b in [1.0, 10.0, 1e4, 1e7] {
            assert_eq!(chi_difference(&one, 2, 40, b), 0.0);
        }
    }

    #[test]
    fn difference_is_zero_below_both_thresholds() {
        let sp = spec();
        let t = sp.threshold(3, 40).min(sp.threshold(3, -40));
        assert_eq!(chi_difference(&sp, 3, 40, 0.999 * t), 0.0);
        assert!(chi_difference(&sp, 3, 40, 1.5 * t) != 0.0);
    }

    #[test]
    fn first_point_is_exact() {
        let sp = spec();
        let d = std::f64::consts::PI / LATTICE_T_W;
        let (b2, _) = pair_minima(&sp, 24, -2, d);
        let k = (b2 * b2 - 1.0).sqrt() / d;
        assert!((k - k.round()).abs() < 1e-6);
        let prev = bracket((k.round() - 1.0) * d);
        assert_eq!(chi_difference(&sp, -2, 24, prev), 0.0);
    }
}
