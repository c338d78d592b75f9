//! Lyapunov exponents of the unstable bundle.
//!
//! The forward exponent is the time average of the unstable Riccati
//! solution `u`; on a closed orbit it is the average of the periodic
//! solution, bounded above by `sqrt(-mean K)`.

mod closed;
mod ensemble;
mod exponent;

pub use closed::{closed_orbit_exponent, ClosedOrbitExponent, SCHWARZ_SLACK};
pub use ensemble::{ensemble_sample, EnsembleOptions, EnsembleSpectrum, Histogram, SeedResult};
pub use exponent::{
    exponent_estimate, exponent_from_history, forward_exponent, forward_exponent_with,
    ExponentEstimate,
};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::jacobi::JacobiError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("path is not closed")]
    NotClosed,
    #[error("period map has no fixed point in [0, {upper}] (g(0) = {g_lo}, g(upper) = {g_hi})")]
    NoFixedPoint { upper: f64, g_lo: f64, g_hi: f64 },
    #[error("exponent {exponent} exceeds the Schwarz bound {bound}")]
    SchwarzViolation { exponent: f64, bound: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("io error: {0}")]
    Io(String),
}
