//! Pressure curves and their Legendre–Fenchel spectra.
//!
//! A [`PressureSource`] supplies `q -> P(q)`. Curves are sampled on a
//! uniform `q` grid, one-sided derivatives come from three-point
//! stencils, and the spectrum `E(alpha) = inf_q (P(q) + q alpha)` is the
//! convex conjugate evaluated on an `alpha` grid.

mod conjugate;
mod corner;
mod curve;
mod family;
mod source;

pub use conjugate::{
    biconjugate, conjugate_at, legendre_conjugate, legendre_conjugate_with_source,
    write_spectrum_csv, AlphaGrid, SpectrumResult, SpectrumRow,
};
pub use corner::{detect_corner, exponent_range, CornerReport, ExponentRange};
pub use curve::{sample_pressure_curve, write_curve_csv, PressureCurve};
pub use family::{entropy_density_gap, family_convergence, FamilyReport};
pub use source::{FnSource, MaxUnion, PressureSource, ZeroUnion};

use thiserror::Error;

/// Default `q` range and step.
pub const DEFAULT_Q_MIN: f64 = -40.0;
pub const DEFAULT_Q_MAX: f64 = 40.0;
pub const DEFAULT_Q_STEP: f64 = 0.05;
/// Default number of `alpha` grid points.
pub const DEFAULT_ALPHA_POINTS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("pressure source failed at q = {q}: {message}")]
    SourceFailure { q: f64, message: String },
    #[error("pressure curve is not convex near q = {q} (second difference {second_difference})")]
    NonConvexInput { q: f64, second_difference: f64 },
    #[error("exponent range [{lower}, {upper}] is too narrow")]
    RangeTooNarrow { lower: f64, upper: f64 },
    #[error("family member {ell} exceeds its successor at q = {q} by {excess}")]
    MonotonicityViolation { ell: usize, q: f64, excess: f64 },
    #[error("supporting line of member {ell} at alpha = {alpha} lies above its successor")]
    SupportingLineViolation { ell: usize, alpha: f64 },
    #[error("curves are sampled on different grids")]
    GridMismatch,
    #[error("q = {q} is not an interior grid point with a full stencil")]
    OutOfGrid { q: f64 },
    #[error("io error: {0}")]
    Io(String),
}

pub(crate) fn io_err(e: std::io::Error) -> ThermoError {
    ThermoError::Io(e.to_string())
}
