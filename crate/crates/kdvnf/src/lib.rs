//! Spectral laboratory for the modulation-restricted normal form of the
//! periodic KdV equation in the rescaled variables
//! `u_t + u_xxx = N(u, u)`, `N(u, u) = <D>^{-s} d_x ((<D>^s u)^2)`.

pub mod audit;
pub mod error;
mod fft;
pub mod field;
pub mod multipliers;
pub mod norms;
pub mod phase;
mod quad;
pub mod system;
pub mod solvers;
pub mod spacetime;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use spacetime::{SpaceTimeField, TimeGrid, TimeSamples, Window};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/fields.md")]
pub mod book_fields {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/phase.md")]
pub mod book_phase {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/multipliers.md")]
pub mod book_multipliers {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/norms.md")]
pub mod book_norms {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/solvers.md")]
pub mod book_solvers {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/audits.md")]
pub mod book_audits {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}
