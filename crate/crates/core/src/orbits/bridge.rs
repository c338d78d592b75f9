use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::refine::{align, diff};
use super::{
    state_at_time, OrbitError, PseudoOrbit, DEFAULT_CURVATURE_THRESHOLD, DEFAULT_DELTA_SHADOW,
};
use crate::geometry::octagon;
use crate::geometry::{
    disk_distance, flow_state, phase_distance, GeodesicPath, SurfaceModel, UnitTangentState,
};
use crate::numeric::wrap_angle;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BridgeOptions {
    /// Largest admissible joint mismatch of the emitted pseudo-orbit.
    pub delta_shadow: f64,
    /// Number of launch angles tried on each side of the connection point.
    pub beta_count: usize,
    /// Launch angles lie in `[-beta_fraction * delta_shadow, beta_fraction * delta_shadow]`.
    pub beta_fraction: f64,
    /// Connector durations are searched in `[t_min, t_max]`.
    pub t_min: f64,
    pub t_max: f64,
    /// Step of the coarse shooting search.
    pub coarse_dt: f64,
    /// Extra full turns around each orbit.
    pub extra_loops: usize,
    pub curvature_threshold: f64,
    /// Step used for legs and polishing.
    pub dt: f64,
    /// Shortest admissible leg.
    pub tau_min: f64,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        Self {
            delta_shadow: DEFAULT_DELTA_SHADOW,
            beta_count: 2000,
            beta_fraction: 0.8,
            t_min: 2.0,
            t_max: 15.0,
            coarse_dt: 0.01,
            extra_loops: 1,
            curvature_threshold: DEFAULT_CURVATURE_THRESHOLD,
            dt: 1e-3,
            tau_min: 0.5,
        }
    }
}

/// Target samples hashed by chart position.
struct TargetIndex {
    cell: f64,
    map: HashMap<(i64, i64), Vec<(UnitTangentState, f64)>>,
}

impl TargetIndex {
    fn new(model: &SurfaceModel, path: &GeodesicPath, spacing: f64) -> Result<Self, OrbitError> {
        let period = path.period().unwrap_or(path.duration());
        let n = (period / spacing).ceil().max(1.0) as usize;
        let cell = 0.02;
        let mut map: HashMap<(i64, i64), Vec<(UnitTangentState, f64)>> = HashMap::new();
        for i in 0..n {
            let s = i as f64 * period / n as f64;
            let v = state_at_time(path, s)?;
            for w in images(model, &v) {
                let key = (
                    (w.position[0] / cell).floor() as i64,
                    (w.position[1] / cell).floor() as i64,
                );
                map.entry(key).or_default().push((w, s));
            }
        }
        Ok(Self { cell, map })
    }

    /// Nearest target (direct distance, no deck images) within the chart
    /// box of half-width `radius`.
    fn nearest(&self, model: &SurfaceModel, v: &UnitTangentState, radius: f64) -> Option<(f64, f64)> {
        let r = (radius / self.cell).ceil() as i64;
        let cx = (v.position[0] / self.cell).floor() as i64;
        let cy = (v.position[1] / self.cell).floor() as i64;
        let mut best: Option<(f64, f64)> = None;
        for i in cx - r..=cx + r {
            for j in cy - r..=cy + r {
                if let Some(list) = self.map.get(&(i, j)) {
                    for (w, s) in list {
                        let d = direct_distance(model, v, w);
                        if best.map_or(true, |(b, _)| d < b) {
                            best = Some((d, *s));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Chart copies of a state that may be near a reduced query point.
fn images(model: &SurfaceModel, v: &UnitTangentState) -> Vec<UnitTangentState> {
    match model {
        SurfaceModel::OctagonHyperbolic { .. } => octagon::neighbour_elements()
            .iter()
            .map(|g| g.apply_state(v))
            .filter(|w| w.position[0].hypot(w.position[1]) < 0.97)
            .collect(),
        SurfaceModel::CollarProfile { .. } => [-1.0, 0.0, 1.0]
            .iter()
            .map(|k| {
                let mut w = *v;
                w.position[1] += k * std::f64::consts::TAU;
                w
            })
            .collect(),
        _ => vec![*v],
    }
}

/// Phase distance without deck images or angle wrapping of positions.
fn direct_distance(model: &SurfaceModel, a: &UnitTangentState, b: &UnitTangentState) -> f64 {
    let da = wrap_angle(a.angle() - b.angle());
    match model {
        SurfaceModel::OctagonHyperbolic { k } => (disk_distance(a.position, b.position) / k).hypot(da),
        SurfaceModel::CollarProfile { warp, .. } => {
            let f = warp.eval(0.5 * (a.position[0] + b.position[0])).0;
            let ds = a.position[0] - b.position[0];
            ds.hypot(f * (a.position[1] - b.position[1])).hypot(da)
        }
        _ => phase_distance(model, a, b),
    }
}

/// Half-width of a chart box containing the phase ball of radius `d`.
fn chart_radius(model: &SurfaceModel, v: &UnitTangentState, d: f64) -> f64 {
    match model {
        SurfaceModel::OctagonHyperbolic { k } => {
            let r2 = v.position[0].powi(2) + v.position[1].powi(2);
            d * k * (1.0 - r2) / 2.0 * d.exp()
        }
        SurfaceModel::ConstantNegative { k } => d * k * v.position[1] * (k * d).exp(),
        SurfaceModel::CollarProfile { warp, .. } => {
            let f = warp.eval(v.position[0] - d).0.min(warp.eval(v.position[0] + d).0);
            d.max(d / f)
        }
        SurfaceModel::CurvatureSignal { .. } => d,
    }
}

#[derive(Clone, Copy, Debug)]
struct Connector {
    beta: f64,
    duration: f64,
    /// Time along the target orbit of the arrival point.
    target_time: f64,
    mismatch: f64,
}

/// Shoot from `from` towards the closed orbit `target`.
fn find_connector(
    model: &SurfaceModel,
    from: &UnitTangentState,
    target: &GeodesicPath,
    opts: &BridgeOptions,
) -> Result<Connector, OrbitError> {
    let index = TargetIndex::new(model, target, opts.coarse_dt)?;
    let beta_max = opts.beta_fraction * opts.delta_shadow;
    let nb = opts.beta_count.max(1);
    let betas: Vec<f64> = (1..=nb)
        .flat_map(|i| {
            let b = beta_max * i as f64 / nb as f64;
            [b, -b]
        })
        .collect();
    let search = opts.delta_shadow;
    let hits: Vec<Option<(f64, f64, f64)>> = betas
        .par_iter()
        .map(|&beta| {
            let mut v = from.rotated(beta);
            let steps = (opts.t_max / opts.coarse_dt).ceil() as usize;
            let mut best: Option<(f64, f64, f64)> = None;
            for i in 1..=steps {
                v = flow_state(model, &v, opts.coarse_dt, opts.coarse_dt, true).ok()?;
                let t = i as f64 * opts.coarse_dt;
                if t < opts.t_min {
                    continue;
                }
                let rad = chart_radius(model, &v, search);
                if let Some((d, s)) = index.nearest(model, &v, rad) {
                    if d < search && best.map_or(true, |(b, _, _)| d < b) {
                        best = Some((d, t, s));
                    }
                }
            }
            best
        })
        .collect();
    let mut candidates: Vec<(f64, f64, f64, f64)> = hits
        .iter()
        .zip(&betas)
        .filter_map(|(h, &b)| h.map(|(d, t, s)| (d, b, t, s)))
        .collect();
    // stable: ties keep the search order
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(_, beta, t, s) in candidates.iter().take(8) {
        if let Some(c) = polish(model, from, target, beta, t, s, opts) {
            if c.mismatch < opts.delta_shadow {
                return Ok(c);
            }
        }
    }
    Err(OrbitError::NoConnector(format!(
        "{} coarse hits below {} in {} launch angles, none polished below the mismatch bound",
        candidates.len(),
        search,
        betas.len()
    )))
}

/// Gauss–Newton on `(beta, t, s)` for the arrival mismatch.
fn polish(
    model: &SurfaceModel,
    from: &UnitTangentState,
    target: &GeodesicPath,
    beta: f64,
    t: f64,
    s: f64,
    opts: &BridgeOptions,
) -> Option<Connector> {
    let resid = |p: &Vector3<f64>| -> Option<([f64; 3], f64)> {
        let end = flow_state(model, &from.rotated(p[0]), p[1], opts.dt, true).ok()?;
        let tgt = state_at_time(target, p[2]).ok()?;
        let a = align(model, &end, &tgt);
        Some((diff(model, &end, a, &tgt), phase_distance(model, &end, &tgt)))
    };
    let mut p = Vector3::new(beta, t, s);
    let (mut r, mut d) = resid(&p)?;
    let h = [1e-9, 1e-6, 1e-6];
    for _ in 0..25 {
        if d < 1e-10 {
            break;
        }
        let mut j = Matrix3::zeros();
        for c in 0..3 {
            let mut pp = p;
            let mut pm = p;
            pp[c] += h[c];
            pm[c] -= h[c];
            let (rp, _) = resid(&pp)?;
            let (rm, _) = resid(&pm)?;
            for k in 0..3 {
                j[(k, c)] = wrap_angle(rp[k] - rm[k]) / (2.0 * h[c]);
            }
        }
        let step = j.lu().solve(&Vector3::from(r).map(|x| -x))?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            let q = p + step * lambda;
            if q[0].abs() < opts.beta_fraction * opts.delta_shadow && q[1] > opts.t_min * 0.5 {
                if let Some((rq, dq)) = resid(&q) {
                    if dq < d {
                        p = q;
                        r = rq;
                        d = dq;
                        improved = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some(Connector {
        beta: p[0],
        duration: p[1],
        target_time: p[2],
        mismatch: d,
    })
}

fn check_orbit(name: &str, p: &GeodesicPath, threshold: f64) -> Result<f64, OrbitError> {
    let period = p.period().ok_or_else(|| OrbitError::NotClosed(name.into()))?;
    let k = p.mean_curvature();
    if !(k <= threshold) {
        return Err(OrbitError::HypothesisViolation(format!(
            "orbit {name} has mean curvature {k}, above {threshold}"
        )));
    }
    Ok(period)
}

/// Index and time of the most negative curvature sample (first on ties).
fn connection_point(p: &GeodesicPath) -> (usize, f64) {
    let mut best = 0;
    for (i, s) in p.samples.iter().enumerate() {
        if s.curvature < p.samples[best].curvature {
            best = i;
        }
    }
    (best, p.samples[best].t - p.samples[0].t)
}

fn same_orbit(model: &SurfaceModel, a: &GeodesicPath, b: &GeodesicPath) -> bool {
    let (ta, tb) = (a.period().unwrap_or(0.0), b.period().unwrap_or(0.0));
    if (ta - tb).abs() > 1e-6 * ta.max(1.0) {
        return false;
    }
    let v = b.state_at(0);
    a.samples
        .iter()
        .filter_map(|s| s.state)
        .any(|w| phase_distance(model, &v, &w) < 1e-6)
}

/// Glue two closed orbits into a 4-leg cyclic pseudo-orbit
/// `A -> connector -> B -> connector -> A`.
///
/// Connections leave each orbit at its most negatively curved sample with
/// a small launch angle and arrive near the other orbit; arrival states
/// are polished by Gauss–Newton on launch angle, duration and arrival
/// time. Each orbit leg includes `extra_loops` full turns. For `A = B` the
/// result is `A` split into four equal legs.
pub fn bridge_orbits(
    model: &SurfaceModel,
    a: &GeodesicPath,
    b: &GeodesicPath,
    opts: &BridgeOptions,
) -> Result<PseudoOrbit, OrbitError> {
    if !model.has_positions() {
        return Err(OrbitError::InvalidArgument("bridging needs positions".into()));
    }
    let ta = check_orbit("A", a, opts.curvature_threshold)?;
    let tb = check_orbit("B", b, opts.curvature_threshold)?;
    if same_orbit(model, a, b) {
        return PseudoOrbit::from_closed_path(a, 4);
    }
    let (ia, sa) = connection_point(a);
    let (ib, sb) = connection_point(b);
    let a_star = a.state_at(ia);
    let b_star = b.state_at(ib);
    let c1 = find_connector(model, &a_star, b, opts)?;
    let c2 = find_connector(model, &b_star, a, opts)?;

    let loop_len = |from: f64, to: f64, period: f64| {
        let mut d = (to - from).rem_euclid(period) + opts.extra_loops as f64 * period;
        while d < opts.tau_min {
            d += period;
        }
        d
    };
    let leg_a = loop_len(c2.target_time, sa, ta);
    let leg_b = loop_len(c1.target_time, sb, tb);
    let nodes = vec![
        state_at_time(a, c2.target_time)?,
        a_star.rotated(c1.beta),
        state_at_time(b, c1.target_time)?,
        b_star.rotated(c2.beta),
    ];
    let durations = vec![leg_a, c1.duration, leg_b, c2.duration];
    let tau_min = durations.iter().cloned().fold(opts.tau_min, f64::min);
    let po = PseudoOrbit::new(model.clone(), nodes, durations, true, tau_min, opts.dt)?;
    if let Some(m) = po.mismatches.iter().find(|&&m| !(m < opts.delta_shadow)) {
        return Err(OrbitError::NoConnector(format!(
            "joint mismatch {m} not below {}",
            opts.delta_shadow
        )));
    }
    Ok(po)
}
