//! Numerical audits: multiplier suprema, the cancellation structure, the
//! normal-form identities and the smoothing diagnostics.

mod cancellation;
mod ensembles;
mod smoothing;
mod symbols;
mod verify;

pub use cancellation::{audit_quad_cancellation, chi_difference, QuadCancellationReport, LATTICE_T_W, VIOLATION_CONSTANT};
pub use ensembles::{random_forcing_ensemble, random_vkn_ensemble, verify_duhamel_bound, verify_vkn, vkn_term, RatioDistribution};
pub use smoothing::{equicontinuity, tail_smoothing, verify_h_smoothing, white_free_field, EquicontinuityReport, HolderRow, SmoothingReport, TailReport, TailRow, HOLDER_NU};
pub use symbols::{audit_symbol, fit_slope, scan_scales, symbol_ratio, SymbolCase, SymbolReport, MAX_SCAN_NMAX, MIN_SCAN_NMAX, SEPARATION};
pub use verify::{trajectory_samples, verify_cancellation, verify_nf_identity, verify_nf_identity_chi_free, CancellationReport, NfIdentityReport, RefinementRow};
