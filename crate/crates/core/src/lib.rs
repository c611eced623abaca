//! Postselected von Neumann measurement with a single-photon-added coherent
//! (SPAC) pointer.
//!
//! Two independent engines compute the same quantities:
//!
//! * [`analytic`]: closed forms assembled from displaced-state kernels.
//! * [`fock`]: explicit state vectors in a truncated photon-number basis.
//!
//! [`metrology`] builds signal-to-noise ratios and quantum Fisher information
//! on top of them, and [`sweep`] drives parameter sweeps, figure presets and
//! the cross-engine `verify` suite.

pub mod analytic;
pub mod error;
pub mod fock;
pub mod metrology;
pub mod model;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{ComplexValue, Coupling, PointerParams, SelectionParams};

/// `|a - b| / max(|a|, |b|, 1)`: relative above unit scale, absolute below.
pub fn relative_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
