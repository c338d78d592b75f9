//! Curvature as a function of time along an orbit.

use crate::geometry::{
    integrate_geodesic, CurvatureSignal, GeodesicPath, SurfaceModel, UnitTangentState,
};

use super::JacobiError;

pub trait CurvatureHistory: Sync {
    fn curvature(&self, t: f64) -> f64;
    /// Interval on which the history is defined.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

impl<H: CurvatureHistory + ?Sized + Send> CurvatureHistory for Box<H> {
    fn curvature(&self, t: f64) -> f64 {
        (**self).curvature(t)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

impl<H: CurvatureHistory + ?Sized> CurvatureHistory for &H {
    fn curvature(&self, t: f64) -> f64 {
        (**self).curvature(t)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

pub struct ConstantHistory(pub f64);

impl CurvatureHistory for ConstantHistory {
    fn curvature(&self, _t: f64) -> f64 {
        self.0
    }
}

/// `t -> signal(offset + t)`.
pub struct SignalHistory {
    pub signal: CurvatureSignal,
    pub offset: f64,
}

impl CurvatureHistory for SignalHistory {
    fn curvature(&self, t: f64) -> f64 {
        self.signal.eval(self.offset + t)
    }
}

/// `t -> K(-t)`.
pub struct Reversed<H>(pub H);

impl<H: CurvatureHistory> CurvatureHistory for Reversed<H> {
    fn curvature(&self, t: f64) -> f64 {
        self.0.curvature(-t)
    }
    fn domain(&self) -> (f64, f64) {
        let (a, b) = self.0.domain();
        (-b, -a)
    }
}

/// Sampled curvature with cubic interpolation on the four nearest
/// samples, clamped to the range of those samples so that jumps do not
/// overshoot. Periodic histories wrap time modulo the period.
pub struct PathHistory {
    t: Vec<f64>,
    k: Vec<f64>,
    period: Option<f64>,
    origin: f64,
}

impl PathHistory {
    /// Samples `(t_i, K_i)` with increasing `t_i`; time is shifted so that
    /// `t = 0` corresponds to `origin`.
    pub fn new(t: Vec<f64>, k: Vec<f64>, origin: f64) -> Self {
        Self {
            t,
            k,
            period: None,
            origin,
        }
    }

    /// Periodic extension of a closed path (samples must span exactly one
    /// period, first and last sample at the same point).
    pub fn periodic(path: &GeodesicPath) -> Option<Self> {
        let period = path.period()?;
        let t0 = path.samples[0].t;
        let n = path.len();
        let ts: Vec<f64> = path.samples.iter().map(|s| s.t - t0).collect();
        let ks = path.curvatures();
        // pad two samples on each side for the stencil
        let mut t = Vec::with_capacity(n + 4);
        let mut k = Vec::with_capacity(n + 4);
        for j in [n - 3, n - 2] {
            t.push(ts[j] - period);
            k.push(ks[j]);
        }
        t.extend_from_slice(&ts);
        k.extend_from_slice(&ks);
        for j in [1, 2] {
            t.push(ts[j] + period);
            k.push(ks[j]);
        }
        Some(Self {
            t,
            k,
            period: Some(period),
            origin: 0.0,
        })
    }

    pub fn from_path(path: &GeodesicPath, origin: f64) -> Self {
        Self::new(path.times(), path.curvatures(), origin)
    }

    fn interpolate(&self, t: f64) -> f64 {
        let n = self.t.len();
        if n == 1 {
            return self.k[0];
        }
        let i = self.t.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        if self.t[i] == t {
            return self.k[i];
        }
        let lo = i.saturating_sub(1).min(n.saturating_sub(4));
        let hi = (lo + 4).min(n);
        let (ts, ks) = (&self.t[lo..hi], &self.k[lo..hi]);
        let mut v = 0.0;
        for a in 0..ts.len() {
            let mut w = 1.0;
            for b in 0..ts.len() {
                if a != b {
                    w *= (t - ts[b]) / (ts[a] - ts[b]);
                }
            }
            v += w * ks[a];
        }
        let mn = ks.iter().cloned().fold(f64::INFINITY, f64::min);
        let mx = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        v.clamp(mn, mx)
    }
}

impl CurvatureHistory for PathHistory {
    fn curvature(&self, t: f64) -> f64 {
        match self.period {
            Some(p) => self.interpolate((t + self.origin).rem_euclid(p)),
            None => self.interpolate(t + self.origin),
        }
    }
    fn domain(&self) -> (f64, f64) {
        match self.period {
            Some(_) => (f64::NEG_INFINITY, f64::INFINITY),
            None => (
                self.t[0] - self.origin,
                self.t[self.t.len() - 1] - self.origin,
            ),
        }
    }
}

/// Curvature history along the orbit of `v0` on `[t_from, t_to]`
/// (`t_from <= 0 <= t_to`), with `t = 0` at `v0`.
pub fn orbit_history(
    model: &SurfaceModel,
    v0: &UnitTangentState,
    t_from: f64,
    t_to: f64,
    dt: f64,
) -> Result<Box<dyn CurvatureHistory + Send>, JacobiError> {
    if !(t_from <= 0.0 && t_to >= 0.0) {
        return Err(JacobiError::InvalidSpan(format!(
            "orbit history needs t_from <= 0 <= t_to, got [{t_from}, {t_to}]"
        )));
    }
    match model {
        SurfaceModel::CurvatureSignal { signal } => Ok(Box::new(SignalHistory {
            signal: signal.clone(),
            offset: v0.t,
        })),
        SurfaceModel::ConstantNegative { k } | SurfaceModel::OctagonHyperbolic { k } => {
            Ok(Box::new(ConstantHistory(-k * k)))
        }
        SurfaceModel::CollarProfile { .. } => {
            let back = integrate_geodesic(model, v0, t_from, dt)?;
            let fwd = integrate_geodesic(model, v0, t_to, dt)?;
            let mut t: Vec<f64> = back.samples.iter().rev().map(|s| s.t).collect();
            let mut k: Vec<f64> = back.samples.iter().rev().map(|s| s.curvature).collect();
            t.pop();
            k.pop();
            t.extend(fwd.samples.iter().map(|s| s.t));
            k.extend(fwd.samples.iter().map(|s| s.curvature));
            Ok(Box::new(PathHistory::new(t, k, 0.0)))
        }
    }
}
