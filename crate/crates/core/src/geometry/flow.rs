use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    phase_distance, GeometryError, SurfaceModel, UnitTangentState, WarpProfile,
    DEFAULT_CLOSURE_TOL,
};

/// Step-control and closure options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    /// Bound on the step-doubling local error estimate.
    pub error_bound: f64,
    /// Check the local error every this many steps (and on the first).
    pub check_every: usize,
    /// Phase distance below which a path is marked closed.
    pub closure_tol: f64,
    /// Reduce octagon states into the fundamental domain after each step.
    pub reduce: bool,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            error_bound: 1e-8,
            check_every: 32,
            closure_tol: DEFAULT_CLOSURE_TOL,
            reduce: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    /// `None` for curvature-signal models.
    pub state: Option<UnitTangentState>,
    pub curvature: f64,
}

/// A deck transformation applied after the step ending at `index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeckEvent {
    pub index: usize,
    pub word: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Closure {
    pub period: f64,
    /// Phase distance between the first and last state.
    pub residual: f64,
}

/// Sampled geodesic with its model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub model: SurfaceModel,
    pub dt: f64,
    pub samples: Vec<PathSample>,
    pub deck_events: Vec<DeckEvent>,
    pub closure: Option<Closure>,
    /// Orbit time of the first sample (used by signal models).
    #[serde(default)]
    pub origin: f64,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn curvatures(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.curvature).collect()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closure.is_some()
    }

    pub fn period(&self) -> Option<f64> {
        self.closure.as_ref().map(|c| c.period)
    }

    /// Chart states; fails for curvature-signal models.
    pub fn states(&self) -> Result<Vec<UnitTangentState>, GeometryError> {
        self.samples
            .iter()
            .map(|s| {
                s.state.ok_or_else(|| GeometryError::ChartEscape {
                    t: s.t,
                    detail: "curvature-signal paths have no positions".into(),
                })
            })
            .collect()
    }

    pub fn positions(&self) -> Result<Vec<[f64; 2]>, GeometryError> {
        Ok(self.states()?.iter().map(|s| s.position).collect())
    }

    /// State at sample `i`; for signal models a state carrying the time.
    pub fn state_at(&self, i: usize) -> UnitTangentState {
        let s = &self.samples[i];
        s.state.unwrap_or_else(|| UnitTangentState::on_signal(s.t))
    }

    /// Mean curvature by the trapezoid rule.
    pub fn mean_curvature(&self) -> f64 {
        let t = self.times();
        let k = self.curvatures();
        let d = self.duration();
        if d <= 0.0 {
            return k.first().cloned().unwrap_or(0.0);
        }
        crate::numeric::trapezoid(&t, &k) / d
    }

    /// Write `t, x, y, dir_x, dir_y, K` (or `t, K` for signals) as CSV.
    pub fn write_csv(&self, path: &Path) -> Result<(), GeometryError> {
        let io = |e: std::io::Error| GeometryError::Io(e.to_string());
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        if self.model.has_positions() {
            writeln!(f, "t,x,y,dir_x,dir_y,K").map_err(io)?;
        } else {
            writeln!(f, "t,K").map_err(io)?;
        }
        for s in &self.samples {
            match &s.state {
                Some(v) => writeln!(
                    f,
                    "{},{},{},{},{},{}",
                    s.t, v.position[0], v.position[1], v.direction[0], v.direction[1], s.curvature
                ),
                None => writeln!(f, "{},{}", s.t, s.curvature),
            }
            .map_err(io)?;
        }
        f.flush().map_err(io)
    }
}

type Y = [f64; 4];

/// Geodesic vector field on `(x, y, cos, sin)` in chart coordinates.
fn rhs(model: &SurfaceModel, y: &Y) -> Y {
    let [x0, x1, c, s] = *y;
    match model {
        SurfaceModel::ConstantNegative { k } => {
            // sigma = -ln(k y): e^{-sigma} = k y, theta' = -k c
            let e = k * x1;
            let th = -k * c;
            [e * c, e * s, -s * th, c * th]
        }
        SurfaceModel::OctagonHyperbolic { k } => {
            let r2 = x0 * x0 + x1 * x1;
            let e = k * (1.0 - r2) / 2.0;
            let th = k * (x1 * c - x0 * s);
            [e * c, e * s, -s * th, c * th]
        }
        SurfaceModel::CollarProfile { warp, .. } => {
            let (f, fp, _) = warp.eval(x0);
            let psi = -(fp / f) * s;
            [c, s / f, -s * psi, c * psi]
        }
        SurfaceModel::CurvatureSignal { .. } => [0.0; 4],
    }
}

fn rk4(model: &SurfaceModel, y: &Y, h: f64) -> Y {
    let add = |a: &Y, b: &Y, s: f64| -> Y { std::array::from_fn(|i| a[i] + s * b[i]) };
    let k1 = rhs(model, y);
    let k2 = rhs(model, &add(y, &k1, h / 2.0));
    let k3 = rhs(model, &add(y, &k2, h / 2.0));
    let k4 = rhs(model, &add(y, &k3, h));
    let mut out: Y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    let n = out[2].hypot(out[3]);
    out[2] /= n;
    out[3] /= n;
    out
}

fn to_y(v: &UnitTangentState) -> Y {
    [v.position[0], v.position[1], v.direction[0], v.direction[1]]
}

fn from_y(y: &Y, t: f64) -> UnitTangentState {
    UnitTangentState {
        position: [y[0], y[1]],
        direction: [y[2], y[3]],
        t,
    }
}

fn escape_check(model: &SurfaceModel, y: &Y, t: f64) -> Result<(), GeometryError> {
    if !y.iter().all(|v| v.is_finite()) {
        return Err(GeometryError::ChartEscape {
            t,
            detail: "non-finite state".into(),
        });
    }
    let bad = match model {
        SurfaceModel::ConstantNegative { .. } => y[1] <= 0.0,
        SurfaceModel::OctagonHyperbolic { .. } => y[0] * y[0] + y[1] * y[1] >= 1.0,
        SurfaceModel::CollarProfile { half_length, .. } => y[0].abs() > *half_length,
        SurfaceModel::CurvatureSignal { .. } => false,
    };
    if bad {
        return Err(GeometryError::ChartEscape {
            t,
            detail: format!("position ({}, {})", y[0], y[1]),
        });
    }
    Ok(())
}

fn local_error(model: &SurfaceModel, y: &Y, h: f64) -> f64 {
    let full = rk4(model, y, h);
    let half = rk4(model, &rk4(model, y, h / 2.0), h / 2.0);
    let scale = match model {
        // chart coordinates shrink towards the boundary; compare in the
        // metric scale
        SurfaceModel::ConstantNegative { k } => 1.0 / (k * y[1]),
        SurfaceModel::OctagonHyperbolic { k } => 2.0 / (k * (1.0 - y[0] * y[0] - y[1] * y[1])),
        SurfaceModel::CollarProfile { warp, .. } => {
            let (f, _, _) = warp.eval(y[0]);
            f.max(1.0)
        }
        SurfaceModel::CurvatureSignal { .. } => 1.0,
    };
    let dp = (full[0] - half[0]).hypot(full[1] - half[1]) * scale;
    let dd = (full[2] - half[2]).hypot(full[3] - half[3]);
    dp.max(dd)
}

/// Flow `v` for time `t_total` with about `dt` per step and return the end
/// state. Octagon states are not reduced when `reduce` is false.
pub fn flow_state(
    model: &SurfaceModel,
    v: &UnitTangentState,
    t_total: f64,
    dt: f64,
    reduce: bool,
) -> Result<UnitTangentState, GeometryError> {
    if !model.has_positions() {
        return Ok(v.at_time(v.t + t_total));
    }
    let n = step_count(t_total, dt)?;
    let h = if n == 0 { 0.0 } else { t_total / n as f64 };
    let mut y = to_y(v);
    for i in 0..n {
        y = rk4(model, &y, h);
        escape_check(model, &y, v.t + (i + 1) as f64 * h)?;
        if reduce {
            let (w, _) = model.reduce(&from_y(&y, 0.0));
            y = to_y(&w);
        }
    }
    Ok(from_y(&y, v.t + t_total))
}

fn step_count(t_total: f64, dt: f64) -> Result<usize, GeometryError> {
    if !(dt.is_finite() && dt > 0.0) || !t_total.is_finite() {
        return Err(GeometryError::InvalidArgument(format!(
            "need finite T and dt > 0 (got T = {t_total}, dt = {dt})"
        )));
    }
    Ok((t_total.abs() / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Integrate the geodesic through `v0` for time `t_total` (negative for
/// backward) with default options.
pub fn integrate_geodesic(
    model: &SurfaceModel,
    v0: &UnitTangentState,
    t_total: f64,
    dt: f64,
) -> Result<GeodesicPath, GeometryError> {
    integrate_geodesic_with(model, v0, t_total, dt, &IntegrationOptions::default())
}

pub fn integrate_geodesic_with(
    model: &SurfaceModel,
    v0: &UnitTangentState,
    t_total: f64,
    dt: f64,
    opts: &IntegrationOptions,
) -> Result<GeodesicPath, GeometryError> {
    model.validate()?;
    let n = step_count(t_total, dt)?;
    let h = if n == 0 { 0.0 } else { t_total / n as f64 };
    if let SurfaceModel::CurvatureSignal { signal } = model {
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 * h;
                PathSample {
                    t,
                    state: None,
                    curvature: signal.eval(v0.t + t),
                }
            })
            .collect();
        let closure = signal.period().and_then(|p| {
            let m = (t_total / p).round();
            (m >= 1.0 && (t_total - m * p).abs() <= 1e-9 * p).then_some(Closure {
                period: t_total,
                residual: 0.0,
            })
        });
        return Ok(GeodesicPath {
            model: model.clone(),
            dt: h.abs(),
            samples,
            deck_events: Vec::new(),
            closure,
            origin: v0.t,
        });
    }
    model.check_domain(v0).map_err(|e| GeometryError::ChartEscape {
        t: 0.0,
        detail: e.to_string(),
    })?;
    let mut y = to_y(&v0.normalised());
    let mut samples = Vec::with_capacity(n + 1);
    let mut deck_events = Vec::new();
    samples.push(PathSample {
        t: 0.0,
        state: Some(from_y(&y, 0.0)),
        curvature: model.curvature(&from_y(&y, v0.t)),
    });
    for i in 0..n {
        let t = (i + 1) as f64 * h;
        if i % opts.check_every.max(1) == 0 {
            let est = local_error(model, &y, h);
            if est > opts.error_bound {
                return Err(GeometryError::StepTooLarge {
                    t,
                    estimate: est,
                    bound: opts.error_bound,
                });
            }
        }
        y = rk4(model, &y, h);
        escape_check(model, &y, t)?;
        let mut st = from_y(&y, t);
        if opts.reduce {
            let (w, word) = model.reduce(&st);
            if !word.is_empty() {
                deck_events.push(DeckEvent {
                    index: i + 1,
                    word,
                });
            }
            st = w;
            y = to_y(&st);
        } else if let SurfaceModel::CollarProfile { .. } = model {
            let (w, _) = model.reduce(&st);
            st = w;
            y = to_y(&st);
        }
        samples.push(PathSample {
            t,
            state: Some(st),
            curvature: model.curvature(&st),
        });
    }
    let mut path = GeodesicPath {
        model: model.clone(),
        dt: h.abs(),
        samples,
        deck_events,
        closure: None,
        origin: v0.t,
    };
    if t_total > 0.0 {
        let a = path.state_at(0);
        let b = path.state_at(path.len() - 1);
        let r = phase_distance(model, &a, &b);
        if r < opts.closure_tol {
            path.closure = Some(Closure {
                period: t_total,
                residual: r,
            });
        }
    }
    Ok(path)
}

/// Warp value helper used by distances.
pub(crate) fn warp_radius(w: &WarpProfile, s: f64) -> f64 {
    w.eval(s).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{octagon, CurvatureSignal};

    #[test]
    fn forward_then_backward_returns() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let v0 = UnitTangentState::new([0.3, 1.7], 0.4);
        let p = integrate_geodesic(&m, &v0, 5.0, 1e-3).unwrap();
        let end = p.state_at(p.len() - 1);
        let back = integrate_geodesic(&m, &end, -5.0, 1e-3).unwrap();
        let w = back.state_at(back.len() - 1);
        assert!(phase_distance(&m, &v0, &w) < 1e-8);
    }

    #[test]
    fn half_plane_geodesic_is_semicircle() {
        // start at i heading right: the geodesic is the unit semicircle
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 1.0], 0.0), 3.0, 1e-3).unwrap();
        for s in p.states().unwrap() {
            let r = s.position[0].hypot(s.position[1]);
            assert!((r - 1.0).abs() < 1e-10);
        }
        // arclength: y(t) = sech(t)
        let end = p.state_at(p.len() - 1);
        assert!((end.position[1] - 1.0 / 3f64.cosh()).abs() < 1e-10);
    }

    #[test]
    fn curvature_scaling() {
        // with k = 2 the same chart curve is traversed twice as fast
        let m = SurfaceModel::constant_negative(2.0).unwrap();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 1.0], 0.0), 1.5, 1e-3).unwrap();
        let end = p.state_at(p.len() - 1);
        assert!((end.position[1] - 1.0 / 3f64.cosh()).abs() < 1e-10);
        assert!(p.curvatures().iter().all(|&k| (k + 4.0).abs() < 1e-15));
    }

    #[test]
    fn waist_is_closed() {
        let m = SurfaceModel::collar(WarpProfile::Cosh { a: 1.0 }, 3.0).unwrap();
        let v = UnitTangentState::new([0.0, 0.0], std::f64::consts::FRAC_PI_2);
        let p = integrate_geodesic(&m, &v, std::f64::consts::TAU, 1e-3).unwrap();
        assert!(p.is_closed());
        assert!(p.samples.iter().all(|s| s.state.unwrap().position[0].abs() < 1e-12));
    }

    #[test]
    fn clairaut_is_conserved() {
        let w = WarpProfile::Cosh { a: 1.0 };
        let m = SurfaceModel::collar(w.clone(), 3.0).unwrap();
        let v = UnitTangentState::new([0.0, 1.0], 1.2);
        let p = integrate_geodesic(&m, &v, 2.0, 1e-3).unwrap();
        let c0 = w.eval(0.0).0 * 1.2f64.sin();
        for s in p.states().unwrap() {
            let c = w.eval(s.position[0]).0 * s.direction[1];
            assert!((c - c0).abs() < 1e-10);
        }
    }

    #[test]
    fn octagon_axis_closes() {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let v = UnitTangentState::new([0.0, 0.0], 0.0);
        let p = integrate_geodesic(&m, &v, octagon::translation_length(), 1e-3).unwrap();
        assert!(p.is_closed(), "{:?}", p.state_at(p.len() - 1));
        assert_eq!(p.deck_events.len(), 1);
        for s in p.states().unwrap() {
            assert!(octagon::in_domain(
                nalgebra::Complex::new(s.position[0], s.position[1]),
                1e-9
            ));
        }
    }

    #[test]
    fn step_too_large() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let e = integrate_geodesic(&m, &UnitTangentState::new([0.0, 1.0], 0.3), 10.0, 2.0);
        assert!(matches!(e, Err(GeometryError::StepTooLarge { .. })), "{e:?}");
    }

    #[test]
    fn collar_escape() {
        let m = SurfaceModel::collar(WarpProfile::Cosh { a: 1.0 }, 1.0).unwrap();
        let e = integrate_geodesic(&m, &UnitTangentState::new([0.0, 0.0], 0.0), 3.0, 1e-3);
        assert!(matches!(e, Err(GeometryError::ChartEscape { .. })));
    }

    #[test]
    fn signal_path_has_no_positions() {
        let m = SurfaceModel::signal(CurvatureSignal::plateau_cycle(2.0, 0.5, 1.0)).unwrap();
        let p = integrate_geodesic(&m, &UnitTangentState::on_signal(0.0), 4.0, 0.01).unwrap();
        assert!(p.is_closed());
        assert!(matches!(p.positions(), Err(GeometryError::ChartEscape { .. })));
        assert_eq!(p.samples[10].curvature, -1.0);
        assert_eq!(p.samples[150].curvature, 0.0);
    }

    #[test]
    fn csv_export() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 1.0], 0.0), 0.01, 1e-3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.csv");
        p.write_csv(&f).unwrap();
        let text = std::fs::read_to_string(f).unwrap();
        assert!(text.starts_with("t,x,y,dir_x,dir_y,K\n"));
        assert_eq!(text.lines().count(), 12);
    }
}
