//! Thermodynamic formalism for geodesic flows on rank-one surfaces of
//! nonpositive curvature.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: surface models, unit tangent states, geodesic integration.
//! * [`jacobi`]: Riccati equation for the unstable/stable Jacobi slopes and
//!   the geometric potential `phi_u`.
//! * [`lyapunov`]: forward and closed-orbit Lyapunov exponents.
//! * [`orbits`]: closed-orbit refinement, bridging, orbit libraries and
//!   Markov codings from section returns.
//! * [`symbolic`]: subshifts of finite type, suspension flows and their
//!   pressure.
//! * [`thermo`]: pressure curves, Legendre–Fenchel spectra, corner
//!   detection and family convergence.

pub mod geometry;
pub mod jacobi;
pub mod lyapunov;
pub mod numeric;
pub mod orbits;
pub mod symbolic;
pub mod thermo;
