use serde::{Deserialize, Serialize};

use super::LyapunovError;
use crate::geometry::{SurfaceModel, UnitTangentState};
use crate::jacobi::{orbit_history, unstable_riccati, CurvatureHistory, Reversed, RiccatiOptions};
use crate::numeric::trapezoid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub chi_plus: f64,
    pub chi_minus: Option<f64>,
    pub horizon: f64,
    /// Average of `-phi_u` over the same horizon.
    pub phi_average: f64,
    /// `|chi_plus - phi_average|`; a boundary term of order `1/T`.
    pub average_discrepancy: f64,
    /// `|chi_plus - chi_minus|` when both are known.
    pub gap: Option<f64>,
    pub regular: bool,
    /// `sqrt(max(-K))` on the forward window.
    pub curvature_scale: f64,
}

/// `(1/T) int_0^T u dt` and `(1/T) int_0^T -phi_u dt` along `history`.
pub fn exponent_from_history<H: CurvatureHistory + ?Sized>(
    history: &H,
    horizon: f64,
    dt: f64,
    opts: &RiccatiOptions,
) -> Result<(f64, f64, f64), LyapunovError> {
    if !(horizon > 0.0) {
        return Err(LyapunovError::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let tr = unstable_riccati(history, (0.0, horizon), dt, opts)?;
    let chi = trapezoid(&tr.t, &tr.u) / horizon;
    let phi: Vec<f64> = tr.phi_u().iter().map(|p| -p).collect();
    let phi_avg = trapezoid(&tr.t, &phi) / horizon;
    let scale = tr.k.iter().fold(0.0f64, |m, k| m.max(-k)).sqrt();
    Ok((chi, phi_avg, scale))
}

fn burn_margin(model: &SurfaceModel, opts: &RiccatiOptions) -> f64 {
    // the default burn-in is 20 / sqrt(max(-K)) on the window; for
    // path-based histories integrate the longest possible burn-in
    opts.burn_in.unwrap_or_else(|| match model {
        SurfaceModel::CollarProfile { .. } => 20.0 / 1e-3f64.sqrt(),
        _ => 0.0,
    })
}

/// Forward exponent along the orbit of `v0` with default burn-in.
pub fn forward_exponent(
    model: &SurfaceModel,
    v0: &UnitTangentState,
    horizon: f64,
    dt: f64,
) -> Result<ExponentEstimate, LyapunovError> {
    forward_exponent_with(model, v0, horizon, dt, &RiccatiOptions::default())
}

pub fn forward_exponent_with(
    model: &SurfaceModel,
    v0: &UnitTangentState,
    horizon: f64,
    dt: f64,
    opts: &RiccatiOptions,
) -> Result<ExponentEstimate, LyapunovError> {
    let margin = burn_margin(model, opts);
    let h = orbit_history(model, v0, -margin, horizon, dt)?;
    let (chi, phi_avg, scale) = exponent_from_history(&h, horizon, dt, opts)?;
    Ok(ExponentEstimate {
        chi_plus: chi,
        chi_minus: None,
        horizon,
        phi_average: phi_avg,
        average_discrepancy: (chi - phi_avg).abs(),
        gap: None,
        regular: false,
        curvature_scale: scale,
    })
}

/// Forward and backward exponents; the backward one is the forward
/// exponent of the time-reversed orbit. Regular when the gap is below
/// `1e-3 * sqrt(max(-K))`.
pub fn exponent_estimate(
    model: &SurfaceModel,
    v0: &UnitTangentState,
    horizon: f64,
    dt: f64,
    opts: &RiccatiOptions,
) -> Result<ExponentEstimate, LyapunovError> {
    let margin = burn_margin(model, opts);
    let h = orbit_history(model, v0, -(horizon + margin), horizon + margin, dt)?;
    let (chi_p, phi_avg, sp) = exponent_from_history(&h, horizon, dt, opts)?;
    let (chi_m, _, sm) = exponent_from_history(&Reversed(&h), horizon, dt, opts)?;
    let scale = sp.max(sm);
    let gap = (chi_p - chi_m).abs();
    Ok(ExponentEstimate {
        chi_plus: chi_p,
        chi_minus: Some(chi_m),
        horizon,
        phi_average: phi_avg,
        average_discrepancy: (chi_p - phi_avg).abs(),
        gap: Some(gap),
        regular: gap < 1e-3 * scale,
        curvature_scale: scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurvatureSignal;

    #[test]
    fn constant_curvature_exponent() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let e = forward_exponent(&m, &UnitTangentState::new([0.0, 1.0], 0.3), 50.0, 1e-3).unwrap();
        assert!((e.chi_plus - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flat_signal_exponent_small() {
        let m = SurfaceModel::signal(CurvatureSignal::Constant { value: 0.0 }).unwrap();
        let e = forward_exponent(&m, &UnitTangentState::on_signal(0.0), 100.0, 1e-2).unwrap();
        assert!(e.chi_plus <= 0.05 && e.chi_plus >= -1e-8);
    }

    #[test]
    fn half_flat_exponent() {
        let m = SurfaceModel::signal(CurvatureSignal::Steps {
            breaks: vec![50.0],
            values: vec![-1.0, 0.0],
        })
        .unwrap();
        let e = forward_exponent(&m, &UnitTangentState::on_signal(0.0), 100.0, 1e-2).unwrap();
        // closed form: (50 + ln 51) / 100
        assert!((e.chi_plus - (50.0 + 51f64.ln()) / 100.0).abs() < 1e-4);
        assert!((e.chi_plus - 0.5).abs() < 0.05);
    }

    #[test]
    fn averages_agree_at_rate_one_over_t() {
        let m = SurfaceModel::signal(CurvatureSignal::Saturating {
            amplitude: 1.5,
            rate: 0.7,
        })
        .unwrap();
        let v = UnitTangentState::on_signal(0.0);
        let opts = RiccatiOptions {
            burn_in: Some(20.0),
            ..Default::default()
        };
        let e1 = forward_exponent_with(&m, &v, 40.0, 1e-3, &opts).unwrap();
        let e2 = forward_exponent_with(&m, &v, 80.0, 1e-3, &opts).unwrap();
        let ratio = e1.average_discrepancy / e2.average_discrepancy;
        assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn two_sided_regular_in_constant_curvature() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let e = exponent_estimate(&m, &UnitTangentState::new([0.0, 1.0], 0.0), 20.0, 1e-2, &Default::default())
            .unwrap();
        assert!(e.regular);
        assert!((e.chi_minus.unwrap() - 1.0).abs() < 1e-9);
    }
}
