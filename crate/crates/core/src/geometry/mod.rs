//! Surface models, unit tangent states and geodesic integration.
//!
//! Four model families are supported:
//!
//! * constant curvature `-k^2` in the upper half-plane,
//! * surfaces of revolution `ds^2 + f(s)^2 dtheta^2` (collars),
//! * a curvature signal prescribed along an abstract unit-speed orbit,
//! * the regular hyperbolic octagon (genus-two Bolza surface) in the disk.
//!
//! Geodesics are integrated with fixed-step RK4 and the direction is
//! renormalised after every step.

mod distance;
pub(crate) use distance::disk_distance;
mod flow;
mod model;
pub mod octagon;
mod state;

pub use distance::phase_distance;
pub use flow::{
    flow_state, integrate_geodesic, integrate_geodesic_with, Closure, DeckEvent, GeodesicPath,
    IntegrationOptions, PathSample,
};
pub use model::{curvature_at, CurvatureSignal, SurfaceModel, WarpProfile};
pub use state::UnitTangentState;

use thiserror::Error;

/// Default closure tolerance in phase distance.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("step too large at t = {t}: local error estimate {estimate:e} exceeds {bound:e}")]
    StepTooLarge { t: f64, estimate: f64, bound: f64 },
    #[error("left the chart at t = {t}: {detail}")]
    ChartEscape { t: f64, detail: String },
    #[error("point outside model domain: {0}")]
    DomainError(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}
