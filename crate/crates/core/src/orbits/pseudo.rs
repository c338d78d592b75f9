use serde::{Deserialize, Serialize};

use super::OrbitError;
use crate::geometry::{flow_state, phase_distance, GeodesicPath, SurfaceModel, UnitTangentState};

/// A chain of geodesic legs `(v_j, T_j)` whose end points nearly match the
/// next start point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    pub model: SurfaceModel,
    pub nodes: Vec<UnitTangentState>,
    /// Leg durations `T_{j+1} - T_j`.
    pub durations: Vec<f64>,
    /// `phase_distance(g^{T_j}(v_j), v_{j+1})`, one per joint.
    pub mismatches: Vec<f64>,
    pub cyclic: bool,
    pub tau_min: f64,
    /// Step used to flow the legs.
    pub dt: f64,
}

impl PseudoOrbit {
    /// Build a pseudo-orbit and compute its joint mismatches. A cyclic
    /// chain has one joint per leg, an open one a joint fewer.
    pub fn new(
        model: SurfaceModel,
        nodes: Vec<UnitTangentState>,
        durations: Vec<f64>,
        cyclic: bool,
        tau_min: f64,
        dt: f64,
    ) -> Result<Self, OrbitError> {
        if nodes.is_empty() || nodes.len() != durations.len() {
            return Err(OrbitError::InvalidArgument(format!(
                "{} nodes and {} durations",
                nodes.len(),
                durations.len()
            )));
        }
        if !(tau_min > 0.0) {
            return Err(OrbitError::InvalidArgument(format!(
                "tau_min must be positive, got {tau_min}"
            )));
        }
        if let Some(d) = durations.iter().find(|&&d| !(d >= tau_min) || !d.is_finite()) {
            return Err(OrbitError::InvalidArgument(format!(
                "leg duration {d} below tau_min = {tau_min}"
            )));
        }
        let mut p = Self {
            model,
            nodes,
            durations,
            mismatches: Vec::new(),
            cyclic,
            tau_min,
            dt,
        };
        p.mismatches = p.compute_mismatches()?;
        Ok(p)
    }

    /// Split a closed path into `legs` legs of equal duration.
    pub fn from_closed_path(path: &GeodesicPath, legs: usize) -> Result<Self, OrbitError> {
        let period = path
            .period()
            .ok_or_else(|| OrbitError::NotClosed("input path".into()))?;
        if legs == 0 {
            return Err(OrbitError::InvalidArgument("need at least one leg".into()));
        }
        let d = period / legs as f64;
        let nodes = (0..legs)
            .map(|j| state_at_time(path, j as f64 * d))
            .collect::<Result<Vec<_>, _>>()?;
        let dt = if path.dt > 0.0 { path.dt } else { 1e-3 };
        Self::new(path.model.clone(), nodes, vec![d; legs], true, d.min(1e-3), dt)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.durations.iter().sum()
    }

    pub fn max_mismatch(&self) -> f64 {
        self.mismatches.iter().cloned().fold(0.0, f64::max)
    }

    /// End state of leg `j`.
    pub fn leg_end(&self, j: usize) -> Result<UnitTangentState, OrbitError> {
        Ok(flow_state(
            &self.model,
            &self.nodes[j],
            self.durations[j],
            self.dt,
            true,
        )?)
    }

    fn compute_mismatches(&self) -> Result<Vec<f64>, OrbitError> {
        let n = self.nodes.len();
        let joints = if self.cyclic { n } else { n - 1 };
        (0..joints)
            .map(|j| {
                let end = self.leg_end(j)?;
                let next = &self.nodes[(j + 1) % n];
                Ok(match self.model {
                    // signal states are compared modulo the period
                    SurfaceModel::CurvatureSignal { ref signal } => {
                        let d = end.t - next.t;
                        match signal.period() {
                            Some(p) => {
                                let r = d.rem_euclid(p);
                                r.min(p - r)
                            }
                            None => d.abs(),
                        }
                    }
                    _ => phase_distance(&self.model, &end, next),
                })
            })
            .collect()
    }
}

/// State of a path at time `s` after its first sample, wrapping modulo the
/// period for closed paths.
pub fn state_at_time(path: &GeodesicPath, s: f64) -> Result<UnitTangentState, OrbitError> {
    if path.is_empty() {
        return Err(OrbitError::InvalidArgument("empty path".into()));
    }
    let t0 = path.samples[0].t;
    let s = match path.period() {
        Some(p) => s.rem_euclid(p),
        None => s,
    };
    if !path.model.has_positions() {
        return Ok(UnitTangentState::on_signal(path.origin + s));
    }
    let i = path
        .samples
        .partition_point(|x| x.t - t0 <= s)
        .clamp(1, path.len())
        - 1;
    let v = path.state_at(i);
    let ds = s - (path.samples[i].t - t0);
    if ds == 0.0 {
        return Ok(v);
    }
    let dt = if path.dt > 0.0 { path.dt } else { 1e-3 };
    Ok(flow_state(&path.model, &v, ds, dt, true)?.at_time(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{integrate_geodesic, octagon, WarpProfile};

    #[test]
    fn closed_path_has_small_mismatches() {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let tau = octagon::translation_length();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 0.0], 0.0), tau, 1e-3).unwrap();
        let po = PseudoOrbit::from_closed_path(&p, 4).unwrap();
        assert_eq!(po.mismatches.len(), 4);
        assert!(po.max_mismatch() < 1e-9, "{:?}", po.mismatches);
        assert!((po.total_duration() - tau).abs() < 1e-12);
    }

    #[test]
    fn open_chain_has_one_joint_fewer() {
        let m = SurfaceModel::collar(WarpProfile::Cosh { a: 1.0 }, 3.0).unwrap();
        let v = UnitTangentState::new([0.0, 0.0], std::f64::consts::FRAC_PI_2);
        let w = flow_state(&m, &v, 1.0, 1e-3, true).unwrap();
        let po = PseudoOrbit::new(m, vec![v, w], vec![1.0, 1.0], false, 0.5, 1e-3).unwrap();
        assert_eq!(po.mismatches.len(), 1);
        assert!(po.mismatches[0] < 1e-12);
    }

    #[test]
    fn short_leg_rejected() {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let v = UnitTangentState::new([0.0, 0.0], 0.0);
        assert!(PseudoOrbit::new(m, vec![v], vec![0.1], true, 0.5, 1e-3).is_err());
    }

    #[test]
    fn state_at_time_wraps() {
        let m = SurfaceModel::collar(WarpProfile::Cosh { a: 1.0 }, 3.0).unwrap();
        let v = UnitTangentState::new([0.0, 0.0], std::f64::consts::FRAC_PI_2);
        let p = integrate_geodesic(&m, &v, std::f64::consts::TAU, 1e-3).unwrap();
        let a = state_at_time(&p, 1.0).unwrap();
        let b = state_at_time(&p, 1.0 + std::f64::consts::TAU).unwrap();
        assert!(phase_distance(&m, &a, &b) < 1e-12);
        assert!((a.position[1] - 1.0).abs() < 1e-9);
    }
}
