//! Subshifts of finite type, suspension flows over them, and their
//! pressure functions.
//!
//! A [`SuspensionModel`] is a coded flow: each symbol carries a roof
//! (return time) and an integrated potential over that return. Flow
//! pressure is the root `c` of `P_disc(q * potential - c * roof) = 0`.

mod bowen;
mod perron;
mod sft;
mod suspension;

pub use bowen::{bowen_orbit_pressure, periodic_point_count};
pub use perron::{log_spectral_radius, perron_vectors, PerronVectors};
pub use sft::Sft;
pub use suspension::{
    equilibrium_stats, flow_pressure, write_sweep_csv, EquilibriumStats, SuspensionModel,
    DEFAULT_FD_STEP,
};

use thiserror::Error;

/// Iteration cap for power iterations and root finders.
pub const ITERATION_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolicError {
    #[error("degenerate shift: {0}")]
    DegenerateShift(String),
    #[error("non-finite weight at symbol {index}")]
    NonFiniteWeight { index: usize },
    #[error("roof must be positive and finite, got {value} at symbol {index}")]
    RoofNotPositive { index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("pressure root could not be bracketed at q = {q}")]
    NoBracket { q: f64 },
    #[error("no periodic points of period <= {n_max}")]
    NoPeriodicPoints { n_max: usize },
    #[error("periodic point enumeration exceeds {limit} points")]
    TooManyPeriodicPoints { limit: usize },
    #[error("io error: {0}")]
    Io(String),
}

/// Discrete topological pressure of the locally constant potential that
/// takes value `weights[i]` on the cylinder of symbol `i`.
///
/// For a reducible shift this is the maximum over the nontrivial
/// irreducible components.
pub fn discrete_pressure(sft: &Sft, weights: &[f64]) -> Result<f64, SymbolicError> {
    log_spectral_radius(sft, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_two_shift_is_log_two() {
        let p = discrete_pressure(&Sft::full(2), &[0.0, 0.0]).unwrap();
        assert!((p - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn golden_mean_is_log_phi() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let p = discrete_pressure(&Sft::golden_mean(), &[0.0, 0.0]).unwrap();
        assert!((p - phi.ln()).abs() < 1e-14);
    }

    #[test]
    fn constant_weight_shifts_pressure() {
        let p = discrete_pressure(&Sft::full(2), &[-0.37, -0.37]).unwrap();
        assert!((p - (2f64.ln() - 0.37)).abs() < 1e-14);
    }

    #[test]
    fn nan_weight_rejected() {
        let e = discrete_pressure(&Sft::full(2), &[f64::NAN, 0.0]).unwrap_err();
        assert_eq!(e, SymbolicError::NonFiniteWeight { index: 0 });
    }
}
