use serde::{Deserialize, Serialize};

use super::{PressureCurve, ThermoError};

/// One-sided derivatives at a grid point and the corner decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerReport {
    pub q0: f64,
    pub d_left: f64,
    pub d_right: f64,
    pub gap: f64,
    pub threshold: f64,
    pub is_corner: bool,
}

/// `q0` must be a grid point with three neighbours on each side.
///
/// Compare `D_R(q0) - D_L(q0)` against ten times the local variation of
/// each one-sided derivative over one grid step. A small absolute floor
/// keeps affine curves from registering rounding noise as a corner.
pub fn detect_corner(curve: &PressureCurve, q0: f64) -> Result<CornerReport, ThermoError> {
    let n = curve.len();
    let i = curve.index_of(q0);
    if (curve.q[i] - q0).abs() > 1e-6 * curve.step || i < 3 || i + 3 >= n {
        return Err(ThermoError::OutOfGrid { q: q0 });
    }
    let dl = curve.d_left[i];
    let dr = curve.d_right[i];
    let variation =
        (curve.d_left[i] - curve.d_left[i - 1]).abs() + (curve.d_right[i + 1] - curve.d_right[i]).abs();
    let threshold = (10.0 * variation).max(1e-8 * (1.0 + dl.abs() + dr.abs()));
    let gap = dr - dl;
    Ok(CornerReport {
        q0: curve.q[i],
        d_left: dl,
        d_right: dr,
        gap,
        threshold,
        is_corner: gap > threshold,
    })
}

/// Lower and upper Lyapunov exponent read off the ends of the curve:
/// `lower = -D_L(q_max)`, `upper = -D_R(q_min)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentRange {
    pub lower: f64,
    pub upper: f64,
}

pub fn exponent_range(curve: &PressureCurve) -> Result<ExponentRange, ThermoError> {
    let n = curve.len();
    let lower = -curve.d_left[n - 1];
    let upper = -curve.d_right[0];
    if !(upper - lower > 1e-9) {
        return Err(ThermoError::RangeTooNarrow { lower, upper });
    }
    Ok(ExponentRange { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{sample_pressure_curve, FnSource};

    #[test]
    fn kink_is_detected() {
        let c = sample_pressure_curve(&FnSource(|q: f64| (-q).max(0.0) * 0.7), -2.0, 2.0, 0.05)
            .unwrap();
        let r = detect_corner(&c, 0.0).unwrap();
        assert!(r.is_corner);
        assert!((r.d_left + 0.7).abs() < 1e-12);
        assert!(r.d_right.abs() < 1e-12);
    }

    #[test]
    fn smooth_is_not_a_corner() {
        let c = sample_pressure_curve(&FnSource(|q: f64| (1.0 + q.exp()).ln()), -2.0, 2.0, 0.05)
            .unwrap();
        for q0 in [-1.0, 0.0, 1.0] {
            assert!(!detect_corner(&c, q0).unwrap().is_corner);
        }
        let lin = sample_pressure_curve(&FnSource(|q: f64| 0.3 - 1.1 * q), -2.0, 2.0, 0.05).unwrap();
        assert!(!detect_corner(&lin, 0.5).unwrap().is_corner);
    }

    #[test]
    fn out_of_grid() {
        let c = sample_pressure_curve(&FnSource(|q: f64| q * q), -1.0, 1.0, 0.1).unwrap();
        assert!(detect_corner(&c, 5.0).is_err());
        assert!(detect_corner(&c, -0.95).is_err());
        assert!(detect_corner(&c, 0.03).is_err());
    }

    #[test]
    fn affine_range_too_narrow() {
        let c = sample_pressure_curve(&FnSource(|q: f64| -q), -1.0, 1.0, 0.1).unwrap();
        assert!(matches!(exponent_range(&c), Err(ThermoError::RangeTooNarrow { .. })));
    }
}
