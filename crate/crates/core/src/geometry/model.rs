use serde::{Deserialize, Serialize};

use super::{octagon, GeometryError, UnitTangentState};

/// Warping function `f` of a collar `ds^2 + f(s)^2 dtheta^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum WarpProfile {
    /// `f(s) = cosh(a s)`, curvature `-a^2`.
    Cosh { a: f64 },
    /// `f(s) = radius` on `|s| <= half_width` (flat band) and
    /// `radius * cosh(a (|s| - half_width))` outside (curvature `-a^2`).
    FlatBand { radius: f64, half_width: f64, a: f64 },
}

impl WarpProfile {
    /// `(f, f', f'')` at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            WarpProfile::Cosh { a } => {
                let (c, sh) = ((a * s).cosh(), (a * s).sinh());
                (c, a * sh, a * a * c)
            }
            WarpProfile::FlatBand {
                radius,
                half_width,
                a,
            } => {
                let u = s.abs() - half_width;
                if u <= 0.0 {
                    (radius, 0.0, 0.0)
                } else {
                    let (c, sh) = ((a * u).cosh(), (a * u).sinh());
                    (radius * c, radius * a * sh * s.signum(), radius * a * a * c)
                }
            }
        }
    }

    pub fn curvature(&self, s: f64) -> f64 {
        let (f, _, f2) = self.eval(s);
        -f2 / f
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let ok = match *self {
            WarpProfile::Cosh { a } => a.is_finite() && a > 0.0,
            WarpProfile::FlatBand {
                radius,
                half_width,
                a,
            } => {
                radius.is_finite()
                    && radius > 0.0
                    && half_width.is_finite()
                    && half_width >= 0.0
                    && a.is_finite()
                    && a >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(GeometryError::InvalidModel(format!("bad warp profile {self:?}")))
        }
    }
}

/// Curvature prescribed as a function of time along an abstract orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CurvatureSignal {
    Constant { value: f64 },
    /// `values[i]` on `[breaks[i-1], breaks[i])`; the value at a break is
    /// the one to its right.
    Steps { breaks: Vec<f64>, values: Vec<f64> },
    /// `-amplitude * min(1, (rate t)^2)`.
    Saturating { amplitude: f64, rate: f64 },
    /// `base(t mod period)`.
    Periodic {
        period: f64,
        base: Box<CurvatureSignal>,
    },
}

impl CurvatureSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CurvatureSignal::Constant { value } => *value,
            CurvatureSignal::Steps { breaks, values } => {
                let i = breaks.partition_point(|&b| b <= t);
                values[i]
            }
            CurvatureSignal::Saturating { amplitude, rate } => {
                -amplitude * (rate * t).powi(2).min(1.0)
            }
            CurvatureSignal::Periodic { period, base } => base.eval(t.rem_euclid(*period)),
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            CurvatureSignal::Periodic { period, .. } => Some(*period),
            CurvatureSignal::Constant { .. } => None,
            _ => None,
        }
    }

    /// Periodic signal spending `fraction` of each period at curvature
    /// `-k^2` and the rest at zero.
    pub fn plateau_cycle(period: f64, fraction: f64, k: f64) -> Self {
        CurvatureSignal::Periodic {
            period,
            base: Box::new(CurvatureSignal::Steps {
                breaks: vec![fraction * period],
                values: vec![-k * k, 0.0],
            }),
        }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidModel(m.to_string()));
        match self {
            CurvatureSignal::Constant { value } => {
                if !(value.is_finite() && *value <= 0.0) {
                    return bad("constant curvature must be finite and <= 0");
                }
            }
            CurvatureSignal::Steps { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return bad("steps need one more value than breaks");
                }
                if breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.iter().any(|b| !b.is_finite())
                {
                    return bad("breaks must be finite and strictly increasing");
                }
                if values.iter().any(|v| !(v.is_finite() && *v <= 0.0)) {
                    return bad("step values must be finite and <= 0");
                }
            }
            CurvatureSignal::Saturating { amplitude, rate } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0 && rate.is_finite()) {
                    return bad("saturating signal needs finite amplitude >= 0");
                }
            }
            CurvatureSignal::Periodic { period, base } => {
                if !(period.is_finite() && *period > 0.0) {
                    return bad("period must be positive");
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// `(min K, max K)` over `[a, b]`, sampled on a grid of spacing `h`
    /// plus all break points inside the interval.
    pub fn range_on(&self, a: f64, b: f64, h: f64) -> (f64, f64) {
        let n = (((b - a) / h).ceil() as usize).max(1);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=n {
            let k = self.eval(a + (b - a) * i as f64 / n as f64);
            lo = lo.min(k);
            hi = hi.max(k);
        }
        (lo, hi)
    }
}

/// A surface of nonpositive curvature together with its chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum SurfaceModel {
    /// Upper half-plane with metric `|dz|^2 / (k y)^2`, curvature `-k^2`.
    ConstantNegative { k: f64 },
    /// Collar `[-half_length, half_length] x S^1` with warp `f`.
    CollarProfile { warp: WarpProfile, half_length: f64 },
    /// Curvature along an abstract orbit; no positions.
    CurvatureSignal { signal: CurvatureSignal },
    /// Regular octagon in the disk with metric
    /// `4 |dz|^2 / (k (1 - |z|^2))^2`, curvature `-k^2`.
    OctagonHyperbolic { k: f64 },
}

impl SurfaceModel {
    pub fn constant_negative(k: f64) -> Result<Self, GeometryError> {
        let m = SurfaceModel::ConstantNegative { k };
        m.validate()?;
        Ok(m)
    }

    pub fn octagon(k: f64) -> Result<Self, GeometryError> {
        let m = SurfaceModel::OctagonHyperbolic { k };
        m.validate()?;
        Ok(m)
    }

    pub fn collar(warp: WarpProfile, half_length: f64) -> Result<Self, GeometryError> {
        let m = SurfaceModel::CollarProfile { warp, half_length };
        m.validate()?;
        Ok(m)
    }

    pub fn signal(signal: CurvatureSignal) -> Result<Self, GeometryError> {
        let m = SurfaceModel::CurvatureSignal { signal };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            SurfaceModel::ConstantNegative { k } | SurfaceModel::OctagonHyperbolic { k } => {
                if !(k.is_finite() && *k > 0.0) {
                    return Err(GeometryError::InvalidModel(format!(
                        "curvature scale k must be positive, got {k}"
                    )));
                }
                Ok(())
            }
            SurfaceModel::CollarProfile { warp, half_length } => {
                if !(half_length.is_finite() && *half_length > 0.0) {
                    return Err(GeometryError::InvalidModel(
                        "collar half length must be positive".into(),
                    ));
                }
                warp.validate()
            }
            SurfaceModel::CurvatureSignal { signal } => signal.validate(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, GeometryError> {
        let m: SurfaceModel =
            serde_json::from_str(s).map_err(|e| GeometryError::InvalidModel(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn has_positions(&self) -> bool {
        !matches!(self, SurfaceModel::CurvatureSignal { .. })
    }

    /// Check that a state lies inside the chart.
    pub fn check_domain(&self, v: &UnitTangentState) -> Result<(), GeometryError> {
        if !v.is_finite() {
            return Err(GeometryError::DomainError("non-finite state".into()));
        }
        let [x, y] = v.position;
        match self {
            SurfaceModel::ConstantNegative { .. } => {
                if y <= 0.0 {
                    return Err(GeometryError::DomainError(format!(
                        "upper half-plane needs y > 0, got {y}"
                    )));
                }
            }
            SurfaceModel::OctagonHyperbolic { .. } => {
                if x * x + y * y >= 1.0 {
                    return Err(GeometryError::DomainError(format!(
                        "disk model needs |z| < 1, got {}",
                        x.hypot(y)
                    )));
                }
            }
            SurfaceModel::CollarProfile { half_length, .. } => {
                if x.abs() > *half_length {
                    return Err(GeometryError::DomainError(format!(
                        "collar coordinate s = {x} outside [-{half_length}, {half_length}]"
                    )));
                }
            }
            SurfaceModel::CurvatureSignal { .. } => {}
        }
        Ok(())
    }

    /// Curvature at a chart point (time for signals).
    pub fn curvature(&self, v: &UnitTangentState) -> f64 {
        match self {
            SurfaceModel::ConstantNegative { k } | SurfaceModel::OctagonHyperbolic { k } => -k * k,
            SurfaceModel::CollarProfile { warp, .. } => warp.curvature(v.position[0]),
            SurfaceModel::CurvatureSignal { signal } => signal.eval(v.t),
        }
    }

    /// Upper bound on `-K` over the model (for burn-in and seeds).
    pub fn max_negative_curvature(&self) -> f64 {
        match self {
            SurfaceModel::ConstantNegative { k } | SurfaceModel::OctagonHyperbolic { k } => k * k,
            SurfaceModel::CollarProfile { warp, .. } => match *warp {
                WarpProfile::Cosh { a } => a * a,
                WarpProfile::FlatBand { a, .. } => a * a,
            },
            SurfaceModel::CurvatureSignal { signal } => max_neg_signal(signal),
        }
    }

    /// Apply the octagon reduction (or collar angle wrap) to a state.
    /// Returns the reduced state and the generator word used.
    pub fn reduce(&self, v: &UnitTangentState) -> (UnitTangentState, Vec<u8>) {
        match self {
            SurfaceModel::OctagonHyperbolic { .. } => octagon::reduce_state(v),
            SurfaceModel::CollarProfile { .. } => {
                let mut w = *v;
                w.position[1] = w.position[1].rem_euclid(std::f64::consts::TAU);
                (w, Vec::new())
            }
            _ => (*v, Vec::new()),
        }
    }
}

fn max_neg_signal(s: &CurvatureSignal) -> f64 {
    match s {
        CurvatureSignal::Constant { value } => -value,
        CurvatureSignal::Steps { values, .. } => values.iter().fold(0.0f64, |a, v| a.max(-v)),
        CurvatureSignal::Saturating { amplitude, .. } => *amplitude,
        CurvatureSignal::Periodic { base, .. } => max_neg_signal(base),
    }
}

/// Gaussian curvature at the footpoint of `v`.
pub fn curvature_at(model: &SurfaceModel, v: &UnitTangentState) -> Result<f64, GeometryError> {
    model.check_domain(v)?;
    Ok(model.curvature(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosh_waist_has_curvature_minus_one() {
        let m = SurfaceModel::collar(WarpProfile::Cosh { a: 1.0 }, 3.0).unwrap();
        let v = UnitTangentState::new([0.0, 0.0], 0.3);
        assert!((curvature_at(&m, &v).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn saturating_signal_value() {
        let m = SurfaceModel::signal(CurvatureSignal::Saturating {
            amplitude: 1.0,
            rate: 1.0,
        })
        .unwrap();
        let k = curvature_at(&m, &UnitTangentState::on_signal(0.5)).unwrap();
        assert!((k + 0.25).abs() < 1e-15);
    }

    #[test]
    fn flat_band_curvature() {
        let w = WarpProfile::FlatBand {
            radius: 1.0,
            half_width: 1.0,
            a: 2.0,
        };
        assert_eq!(w.curvature(0.5), 0.0);
        assert_eq!(w.curvature(1.0), 0.0);
        assert!((w.curvature(1.5) + 4.0).abs() < 1e-12);
        assert!((w.curvature(-1.5) + 4.0).abs() < 1e-12);
        // f' is continuous at the band edge
        assert!(w.eval(1.0 + 1e-9).1.abs() < 1e-8);
    }

    #[test]
    fn domain_errors() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        assert!(curvature_at(&m, &UnitTangentState::new([0.0, -1.0], 0.0)).is_err());
        let o = SurfaceModel::octagon(1.0).unwrap();
        assert!(curvature_at(&o, &UnitTangentState::new([1.0, 0.0], 0.0)).is_err());
    }

    #[test]
    fn rejects_positive_curvature() {
        assert!(SurfaceModel::constant_negative(0.0).is_err());
        assert!(SurfaceModel::signal(CurvatureSignal::Constant { value: 0.5 }).is_err());
        assert!(SurfaceModel::signal(CurvatureSignal::Steps {
            breaks: vec![0.0],
            values: vec![-1.0, 0.1]
        })
        .is_err());
    }

    #[test]
    fn steps_right_continuous() {
        let s = CurvatureSignal::Steps {
            breaks: vec![0.0],
            values: vec![-1.0, 0.0],
        };
        assert_eq!(s.eval(-1e-12), -1.0);
        assert_eq!(s.eval(0.0), 0.0);
    }

    #[test]
    fn model_json_round_trip() {
        let m = SurfaceModel::collar(
            WarpProfile::FlatBand {
                radius: 1.0,
                half_width: 0.5,
                a: 1.0,
            },
            4.0,
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(SurfaceModel::from_json(&s).unwrap(), m);
        assert!(SurfaceModel::from_json(r#"{"variant":"ConstantNegative","k":-1}"#).is_err());
    }
}

impl SurfaceModel {
    /// Draw a state uniformly with respect to the Liouville measure on a
    /// bounded region of the chart: the octagon itself, the collar, a
    /// hyperbolic disc of radius 1 around `i` in the half-plane, or a
    /// time offset within one period (or `[0, 100)`) for signals.
    pub fn sample_state<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> UnitTangentState {
        use std::f64::consts::TAU;
        let angle = rng.gen::<f64>() * TAU;
        match self {
            SurfaceModel::ConstantNegative { .. } => {
                // uniform in a hyperbolic disc in the disk model, then the
                // Cayley map w -> i (1 + w) / (1 - w)
                let u: f64 = rng.gen();
                let rho = (1.0 + u * (1f64.cosh() - 1.0)).acosh();
                let phi = rng.gen::<f64>() * TAU;
                let w = nalgebra::Complex::from_polar((rho / 2.0).tanh(), phi);
                let one = nalgebra::Complex::new(1.0, 0.0);
                let i = nalgebra::Complex::new(0.0, 1.0);
                let z = i * (one + w) / (one - w);
                let rot = (i * 2.0 / ((one - w) * (one - w))).arg();
                UnitTangentState::new([z.re, z.im], angle + rot)
            }
            SurfaceModel::OctagonHyperbolic { .. } => {
                let rv = octagon::vertex_radius();
                loop {
                    let x = (rng.gen::<f64>() * 2.0 - 1.0) * rv;
                    let y = (rng.gen::<f64>() * 2.0 - 1.0) * rv;
                    let r2 = x * x + y * y;
                    if r2 >= rv * rv {
                        continue;
                    }
                    let z = nalgebra::Complex::new(x, y);
                    if !octagon::in_domain(z, 0.0) {
                        continue;
                    }
                    let accept = ((1.0 - rv * rv) / (1.0 - r2)).powi(2);
                    if rng.gen::<f64>() < accept {
                        return UnitTangentState::new([x, y], angle);
                    }
                }
            }
            SurfaceModel::CollarProfile { warp, half_length } => {
                let fmax = warp.eval(*half_length).0.max(warp.eval(0.0).0);
                loop {
                    let s = (rng.gen::<f64>() * 2.0 - 1.0) * half_length;
                    if rng.gen::<f64>() * fmax <= warp.eval(s).0 {
                        let th = rng.gen::<f64>() * TAU;
                        return UnitTangentState::new([s, th], angle);
                    }
                }
            }
            SurfaceModel::CurvatureSignal { signal } => {
                let span = signal.period().unwrap_or(100.0);
                UnitTangentState::on_signal(rng.gen::<f64>() * span)
            }
        }
    }
}
