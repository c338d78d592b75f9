//! Closed orbits from pseudo-orbits, bridging, filtered orbit libraries and
//! Markov codings from section returns.
//!
//! Pseudo-orbits are closed by multiple-shooting Newton iteration on the
//! joint states and leg durations. Bridges glue two closed orbits through
//! a pair of connecting legs found by shooting. Libraries of refined orbits
//! are filtered away from the flat set and coded by their returns to a
//! cross-section.

mod bridge;
mod coding;
mod library;
mod pseudo;
mod refine;

pub use bridge::{bridge_orbits, BridgeOptions};
pub use coding::{build_markov_coding, CodingCell, CodingOptions, Crossing, Section, SectionCoding};
pub use library::{
    build_lambda_ell, build_library, mixed_flat_band_library, FlatThresholds, LibraryOrbit,
    OrbitLibrary, Provenance,
};
pub use pseudo::{state_at_time, PseudoOrbit};
pub use refine::{refine_closed_orbit, RefineOptions, RefinedOrbit};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::lyapunov::LyapunovError;
use crate::symbolic::SymbolicError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("refined orbit leaves the {epsilon}-neighbourhood of the pseudo-orbit (distance {distance})")]
    ShadowingExceeded { distance: f64, epsilon: f64 },
    #[error("no connector found: {0}")]
    NoConnector(String),
    #[error("cell {cell} has diameter {diameter} above {limit}; use a smaller radius or a larger library")]
    CellOverlap { cell: usize, diameter: f64, limit: f64 },
    #[error("orbit {0} does not cross the section")]
    NoCrossing(String),
    #[error("orbit {0} is not closed")]
    NotClosed(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("io error: {0}")]
    Io(String),
}

/// Mean curvature below which a leg counts as negatively curved.
pub const DEFAULT_CURVATURE_THRESHOLD: f64 = -1e-2;
/// Largest admissible joint mismatch.
pub const DEFAULT_DELTA_SHADOW: f64 = 0.05;
/// Shadowing radius.
pub const DEFAULT_EPSILON: f64 = 0.1;
