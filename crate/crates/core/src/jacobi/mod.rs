//! Riccati equation `u' = -u^2 - K(t)` for the slope `u = j'/j` of
//! perpendicular Jacobi fields, its unstable and stable solutions, and
//! the geometric potential
//!
//! `phi_u = -u (1 - K) / (1 + u^2)`,
//!
//! which equals `-(d/dt) log |(j, j')|` along the unstable Jacobi field.

mod frame;
mod history;
mod riccati;

pub use frame::{jacobi_frame, JacobiFrame};
pub use history::{
    orbit_history, ConstantHistory, CurvatureHistory, PathHistory, Reversed, SignalHistory,
};
pub use riccati::{
    phi_u, rank_classify, riccati_integrate, stable_riccati, unstable_riccati, Branch,
    RankClass, RiccatiOptions, RiccatiTrace, BLOW_UP, DEFAULT_MIN_WINDOW,
};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobiError {
    #[error("Riccati solution blew up (|u| > 1e6) at t = {t}")]
    BlowUp { t: f64 },
    #[error("burn-in {burn_in} too short: seeds differ by {gap:e} on the window")]
    InsufficientBurnIn { gap: f64, burn_in: f64 },
    #[error("curvature history covers [{available_from}, {available_to}], need [{needed_from}, {needed_to}]")]
    InsufficientHistory {
        needed_from: f64,
        needed_to: f64,
        available_from: f64,
        available_to: f64,
    },
    #[error("window of length {length} is shorter than the minimum {min}")]
    WindowTooShort { length: f64, min: f64 },
    #[error("invalid span or step: {0}")]
    InvalidSpan(String),
    #[error("trace mismatch: {0}")]
    TraceMismatch(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("io error: {0}")]
    Io(String),
}
