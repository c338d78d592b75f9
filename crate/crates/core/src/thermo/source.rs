use super::ThermoError;
use crate::symbolic::SuspensionModel;

/// Anything that evaluates a pressure function.
pub trait PressureSource: Sync {
    fn pressure(&self, q: f64) -> Result<f64, ThermoError>;
}

impl PressureSource for SuspensionModel {
    fn pressure(&self, q: f64) -> Result<f64, ThermoError> {
        self.flow_pressure(q).map_err(|e| ThermoError::SourceFailure {
            q,
            message: e.to_string(),
        })
    }
}

impl<S: PressureSource + ?Sized> PressureSource for &S {
    fn pressure(&self, q: f64) -> Result<f64, ThermoError> {
        (**self).pressure(q)
    }
}

impl<S: PressureSource + ?Sized + Send> PressureSource for Box<S> {
    fn pressure(&self, q: f64) -> Result<f64, ThermoError> {
        (**self).pressure(q)
    }
}

/// Closed-form pressure.
pub struct FnSource<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> PressureSource for FnSource<F> {
    fn pressure(&self, q: f64) -> Result<f64, ThermoError> {
        let p = (self.0)(q);
        if p.is_finite() {
            Ok(p)
        } else {
            Err(ThermoError::SourceFailure {
                q,
                message: format!("non-finite value {p}"),
            })
        }
    }
}

/// Union of a basic set with a component of zero pressure (a flat set
/// where the potential vanishes): `max(P(q), 0)`.
pub struct ZeroUnion<S>(pub S);

impl<S: PressureSource> PressureSource for ZeroUnion<S> {
    fn pressure(&self, q: f64) -> Result<f64, ThermoError> {
        Ok(self.0.pressure(q)?.max(0.0))
    }
}

/// Pressure of a disjoint union: the pointwise maximum.
pub struct MaxUnion(pub Vec<Box<dyn PressureSource + Send>>);

impl PressureSource for MaxUnion {
    fn pressure(&self, q: f64) -> Result<f64, ThermoError> {
        let mut best = f64::NEG_INFINITY;
        for s in &self.0 {
            best = best.max(s.pressure(q)?);
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(ThermoError::SourceFailure {
                q,
                message: "empty union".into(),
            })
        }
    }
}
