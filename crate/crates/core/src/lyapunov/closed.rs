use serde::{Deserialize, Serialize};

use super::LyapunovError;
use crate::geometry::{GeodesicPath, SurfaceModel};
use crate::jacobi::{riccati_integrate, CurvatureHistory, PathHistory, SignalHistory};
use crate::numeric::trapezoid;

/// Slack on the Schwarz bound `chi <= sqrt(-mean K)`.
pub const SCHWARZ_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbitExponent {
    pub exponent: f64,
    /// `sqrt(-(1/tau) int K)`.
    pub schwarz_bound: f64,
    pub mean_curvature: f64,
    pub period: f64,
    /// Periodic Riccati solution at `t = 0`.
    pub u0: f64,
    /// Sample times and periodic solution on `[0, tau]`.
    pub t: Vec<f64>,
    pub u: Vec<f64>,
}

fn history_of(path: &GeodesicPath) -> Result<Box<dyn CurvatureHistory + Send>, LyapunovError> {
    match &path.model {
        SurfaceModel::CurvatureSignal { signal } => Ok(Box::new(SignalHistory {
            signal: signal.clone(),
            offset: path.origin,
        })),
        _ => Ok(Box::new(
            PathHistory::periodic(path).ok_or(LyapunovError::NotClosed)?,
        )),
    }
}

/// Exponent of a closed orbit from its periodic Riccati solution.
///
/// The period map `u(0) -> u(tau)` is increasing, maps `[0, kmax]` into
/// itself (`kmax = sqrt(max(-K))`), and its largest fixed point there is
/// the unstable solution; it is found by bisection on `P(u0) - u0`.
pub fn closed_orbit_exponent(path: &GeodesicPath) -> Result<ClosedOrbitExponent, LyapunovError> {
    let period = path.period().ok_or(LyapunovError::NotClosed)?;
    let history = history_of(path)?;
    let dt = if path.dt > 0.0 { path.dt } else { 1e-3 };
    let kgrid = riccati_integrate(&history, 0.0, 0.0, period, dt)?;
    let kmax = kgrid.k.iter().fold(0.0f64, |m, k| m.max(-k)).sqrt();
    let period_map = |u0: f64| -> Result<f64, LyapunovError> {
        Ok(riccati_integrate(&history, u0, 0.0, period, dt)?.last())
    };
    let g_lo = period_map(0.0)?;
    let g_hi = period_map(kmax)? - kmax;
    let u0 = if kmax == 0.0 {
        0.0
    } else {
        if g_lo < 0.0 || g_hi > 0.0 {
            return Err(LyapunovError::NoFixedPoint {
                upper: kmax,
                g_lo,
                g_hi,
            });
        }
        if g_hi == 0.0 {
            kmax
        } else {
            let (mut lo, mut hi) = (0.0f64, kmax);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo < 1e-15 {
                    break;
                }
                if period_map(mid)? - mid > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // the upper end converges to the largest fixed point
            hi
        }
    };
    let tr = riccati_integrate(&history, u0, 0.0, period, dt)?;
    let exponent = trapezoid(&tr.t, &tr.u) / period;
    let mean_curvature = trapezoid(&tr.t, &tr.k) / period;
    let schwarz_bound = (-mean_curvature).max(0.0).sqrt();
    if exponent > schwarz_bound + SCHWARZ_SLACK {
        return Err(LyapunovError::SchwarzViolation {
            exponent,
            bound: schwarz_bound,
        });
    }
    Ok(ClosedOrbitExponent {
        exponent,
        schwarz_bound,
        mean_curvature,
        period,
        u0,
        t: tr.t,
        u: tr.u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        integrate_geodesic, octagon, CurvatureSignal, UnitTangentState, WarpProfile,
    };

    #[test]
    fn octagon_axis_saturates_bound() {
        for k in [1.0, 2.0] {
            let m = SurfaceModel::octagon(k).unwrap();
            let tau = octagon::translation_length() / k;
            let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 0.0], 0.0), tau, 1e-3)
                .unwrap();
            let c = closed_orbit_exponent(&p).unwrap();
            assert!((c.exponent - k).abs() < 1e-12);
            assert!((c.schwarz_bound - k).abs() < 1e-12);
        }
    }

    #[test]
    fn waist_exponent_one() {
        let m = SurfaceModel::collar(WarpProfile::Cosh { a: 1.0 }, 3.0).unwrap();
        let v = UnitTangentState::new([0.0, 0.0], std::f64::consts::FRAC_PI_2);
        let p = integrate_geodesic(&m, &v, std::f64::consts::TAU, 1e-3).unwrap();
        let c = closed_orbit_exponent(&p).unwrap();
        assert!((c.exponent - 1.0).abs() < 1e-9);
        assert!((c.schwarz_bound - 1.0).abs() < 1e-9);
    }

    #[test]
    fn plateau_cycle_below_sqrt_fraction() {
        for p in [0.25, 0.5, 0.8] {
            let m = SurfaceModel::signal(CurvatureSignal::plateau_cycle(4.0, p, 1.0)).unwrap();
            let path = integrate_geodesic(&m, &UnitTangentState::on_signal(0.0), 4.0, 1e-3).unwrap();
            let c = closed_orbit_exponent(&path).unwrap();
            assert!(c.exponent < p.sqrt() - 1e-3, "p={p}: {}", c.exponent);
            assert!(c.exponent > 0.0);
            assert!((c.u[0] - c.u[c.u.len() - 1]).abs() < 1e-9);
        }
    }

    #[test]
    fn open_path_rejected() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 1.0], 0.0), 1.0, 1e-3).unwrap();
        assert_eq!(closed_orbit_exponent(&p).unwrap_err(), LyapunovError::NotClosed);
    }
}
