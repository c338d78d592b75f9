use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    OrbitError, PseudoOrbit, DEFAULT_CURVATURE_THRESHOLD, DEFAULT_DELTA_SHADOW, DEFAULT_EPSILON,
};
use crate::geometry::octagon::{self, Mobius};
use crate::geometry::{
    flow_state, integrate_geodesic, integrate_geodesic_with, phase_distance, Closure,
    GeodesicPath, IntegrationOptions, PathSample, SurfaceModel, UnitTangentState,
};
use crate::numeric::wrap_angle;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineOptions {
    /// Stop when every joint residual component is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Legs longer than this are subdivided before shooting.
    pub max_leg: f64,
    /// Finite-difference step for the shooting Jacobian.
    pub fd_step: f64,
    /// Largest admissible input mismatch.
    pub delta_shadow: f64,
    /// Largest admissible distance between input legs and the result.
    pub epsilon: f64,
    /// Each input leg must have mean curvature at most this.
    pub curvature_threshold: f64,
    pub dt: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 40,
            max_leg: 1.5,
            fd_step: 1e-7,
            delta_shadow: DEFAULT_DELTA_SHADOW,
            epsilon: DEFAULT_EPSILON,
            curvature_threshold: DEFAULT_CURVATURE_THRESHOLD,
            dt: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinedOrbit {
    pub path: GeodesicPath,
    /// Shooting nodes and leg durations after convergence.
    pub nodes: Vec<UnitTangentState>,
    pub durations: Vec<f64>,
    pub iterations: usize,
    /// Largest joint residual component at exit.
    pub residual: f64,
    /// Largest phase distance to the input legs at matched times.
    pub shadow_distance: f64,
}

/// Deck alignment of a leg end with the next node.
#[derive(Clone, Copy, Debug)]
pub(super) enum Align {
    None,
    Deck(Mobius),
}

struct Shooter<'a> {
    model: &'a SurfaceModel,
    steps: Vec<usize>,
}

impl Shooter<'_> {
    fn node(x: &[f64], i: usize) -> UnitTangentState {
        UnitTangentState::new([x[4 * i], x[4 * i + 1]], x[4 * i + 2])
    }

    fn leg_end(&self, x: &[f64], i: usize) -> Result<UnitTangentState, OrbitError> {
        let d = x[4 * i + 3];
        if !(d > 0.0) {
            return Err(OrbitError::InvalidArgument(format!("leg {i} has duration {d}")));
        }
        let n = self.steps[i] as f64;
        Ok(flow_state(self.model, &Self::node(x, i), d, d / n, false)?)
    }

    /// Residual vector and the alignments used.
    fn residual(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Align>), OrbitError> {
        let m = self.steps.len();
        let parts: Vec<Result<([f64; 3], Align), OrbitError>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let end = self.leg_end(x, i)?;
                let next = Self::node(x, (i + 1) % m);
                let a = align(self.model, &end, &next);
                Ok((diff(self.model, &end, a, &next), a))
            })
            .collect();
        let mut r = Vec::with_capacity(3 * m);
        let mut al = Vec::with_capacity(m);
        for p in parts {
            let (d, a) = p?;
            r.extend_from_slice(&d);
            al.push(a);
        }
        Ok((r, al))
    }

    fn jacobian(&self, x: &[f64], al: &[Align], h: f64) -> Result<DMatrix<f64>, OrbitError> {
        let m = self.steps.len();
        let blocks: Vec<Result<[[f64; 4]; 3], OrbitError>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let next = Self::node(x, (i + 1) % m);
                let mut b = [[0.0; 4]; 3];
                for c in 0..4 {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[4 * i + c] += h;
                    xm[4 * i + c] -= h;
                    let rp = diff(self.model, &self.leg_end(&xp, i)?, al[i], &next);
                    let rm = diff(self.model, &self.leg_end(&xm, i)?, al[i], &next);
                    for r in 0..3 {
                        b[r][c] = wrap_angle(rp[r] - rm[r]) / (2.0 * h);
                    }
                }
                Ok(b)
            })
            .collect();
        let mut j = DMatrix::zeros(3 * m, 4 * m);
        for (i, b) in blocks.into_iter().enumerate() {
            let b = b?;
            for r in 0..3 {
                for c in 0..4 {
                    j[(3 * i + r, 4 * i + c)] = b[r][c];
                }
            }
            let n = (i + 1) % m;
            for r in 0..3 {
                j[(3 * i + r, 4 * n + r)] -= 1.0;
            }
        }
        Ok(j)
    }
}

/// Align `end` with `next` (octagon deck element or none).
pub(super) fn align(model: &SurfaceModel, end: &UnitTangentState, next: &UnitTangentState) -> Align {
    match model {
        SurfaceModel::OctagonHyperbolic { .. } => {
            let (_, _, m) = octagon::reduce_point(Complex::new(end.position[0], end.position[1]));
            let best = octagon::neighbour_elements()
                .iter()
                .map(|g| g.compose(&m))
                .map(|w| {
                    let e = w.apply_state(end);
                    let d = (e.position[0] - next.position[0])
                        .hypot(e.position[1] - next.position[1])
                        + wrap_angle(e.angle() - next.angle()).abs();
                    (d, w)
                })
                .fold(None::<(f64, Mobius)>, |acc, (d, w)| match acc {
                    Some((b, _)) if b <= d => acc,
                    _ => Some((d, w)),
                });
            Align::Deck(best.map(|(_, w)| w).unwrap_or_else(Mobius::identity))
        }
        _ => Align::None,
    }
}

/// Chart difference of the aligned end and `next`; angles wrapped.
pub(super) fn diff(model: &SurfaceModel, end: &UnitTangentState, a: Align, next: &UnitTangentState) -> [f64; 3] {
    let e = match a {
        Align::None => *end,
        Align::Deck(w) => w.apply_state(end),
    };
    let dy = e.position[1] - next.position[1];
    let dy = match model {
        SurfaceModel::CollarProfile { .. } => wrap_angle(dy),
        _ => dy,
    };
    [
        e.position[0] - next.position[0],
        dy,
        wrap_angle(e.angle() - next.angle()),
    ]
}


fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Minimum-norm solution of `J d = -r`.
pub(super) fn min_norm_step(j: &DMatrix<f64>, r: &[f64]) -> Option<DVector<f64>> {
    let rv = DVector::from_column_slice(r);
    let jjt = j * j.transpose();
    if let Some(ch) = jjt.clone().cholesky() {
        let y = ch.solve(&rv);
        return Some(-(j.transpose() * y));
    }
    let svd = j.clone().svd(true, true);
    svd.solve(&(-rv), 1e-12).ok()
}

/// Close a cyclic pseudo-orbit by multiple-shooting Newton iteration.
///
/// Legs are split into pieces of at most `max_leg`; the unknowns are the
/// footpoint, direction angle and duration of every piece. Each Newton
/// step is the minimum-norm solution of the linearised joint equations,
/// damped by backtracking. The result is checked against the input legs
/// at matched times.
pub fn refine_closed_orbit(
    model: &SurfaceModel,
    pseudo: &PseudoOrbit,
    opts: &RefineOptions,
) -> Result<RefinedOrbit, OrbitError> {
    if !pseudo.cyclic {
        return Err(OrbitError::InvalidArgument("pseudo-orbit must be cyclic".into()));
    }
    if !model.has_positions() {
        return Err(OrbitError::InvalidArgument(
            "shooting needs a model with positions".into(),
        ));
    }
    if let Some((j, d)) = pseudo
        .mismatches
        .iter()
        .enumerate()
        .find(|(_, &d)| !(d < opts.delta_shadow))
    {
        return Err(OrbitError::HypothesisViolation(format!(
            "joint {j} mismatch {d} is not below {}",
            opts.delta_shadow
        )));
    }
    let legs: Vec<GeodesicPath> = pseudo
        .nodes
        .par_iter()
        .zip(pseudo.durations.par_iter())
        .map(|(v, &d)| integrate_geodesic(model, v, d, opts.dt))
        .collect::<Result<_, _>>()?;
    for (j, leg) in legs.iter().enumerate() {
        let k = leg.mean_curvature();
        if !(k <= opts.curvature_threshold) {
            return Err(OrbitError::HypothesisViolation(format!(
                "leg {j} has mean curvature {k}, above {}",
                opts.curvature_threshold
            )));
        }
    }

    // subdivide
    let mut x = Vec::new();
    let mut steps = Vec::new();
    let mut first_piece = Vec::new();
    for (leg, &d) in legs.iter().zip(&pseudo.durations) {
        let s = (d / opts.max_leg).ceil().max(1.0) as usize;
        let piece = d / s as f64;
        first_piece.push(steps.len());
        for i in 0..s {
            let v = if i == 0 {
                leg.state_at(0)
            } else {
                flow_state(model, &leg.state_at(0), i as f64 * piece, opts.dt, true)?
            };
            x.extend_from_slice(&[v.position[0], v.position[1], v.angle(), piece]);
            steps.push(((piece / opts.dt) - 1e-9).ceil().max(1.0) as usize);
        }
    }
    let shooter = Shooter { model, steps };

    let (mut r, mut al) = shooter.residual(&x)?;
    let mut iterations = 0;
    while max_abs(&r) >= opts.tol {
        if iterations >= opts.max_iter {
            return Err(OrbitError::NoConvergence {
                iterations,
                residual: max_abs(&r),
            });
        }
        iterations += 1;
        let j = shooter.jacobian(&x, &al, opts.fd_step)?;
        let step = min_norm_step(&j, &r).ok_or(OrbitError::NoConvergence {
            iterations,
            residual: max_abs(&r),
        })?;
        let n0 = norm(&r);
        let mut accepted = None;
        let mut lambda = 1.0;
        for _ in 0..12 {
            let mut xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            if let SurfaceModel::OctagonHyperbolic { .. } = model {
                for i in 0..shooter.steps.len() {
                    let (v, _) = model.reduce(&Shooter::node(&xn, i));
                    xn[4 * i] = v.position[0];
                    xn[4 * i + 1] = v.position[1];
                    xn[4 * i + 2] = v.angle();
                }
            }
            if let Ok((rn, aln)) = shooter.residual(&xn) {
                if norm(&rn) < n0 {
                    accepted = Some((xn, rn, aln));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xn, rn, aln)) => {
                x = xn;
                r = rn;
                al = aln;
            }
            None => {
                return Err(OrbitError::NoConvergence {
                    iterations,
                    residual: max_abs(&r),
                })
            }
        }
    }

    let m = shooter.steps.len();
    let nodes: Vec<UnitTangentState> = (0..m).map(|i| Shooter::node(&x, i)).collect();
    let durations: Vec<f64> = (0..m).map(|i| x[4 * i + 3]).collect();
    let path = assemble(model, &nodes, &durations, &shooter.steps, opts.dt)?;
    let closure = path.closure.as_ref().map(|c| c.residual).unwrap_or(f64::INFINITY);
    if !(closure < 1e-6) {
        return Err(OrbitError::NoConvergence {
            iterations,
            residual: closure,
        });
    }

    let shadow_distance = legs
        .par_iter()
        .zip(first_piece.par_iter())
        .map(|(leg, &i)| -> Result<f64, OrbitError> {
            let refined = integrate_geodesic(model, &nodes[i], leg.duration(), opts.dt)?;
            let n = leg.len().min(refined.len());
            let stride = ((0.01 / opts.dt).round() as usize).max(1);
            let mut best = 0.0f64;
            for k in (0..n).step_by(stride).chain(std::iter::once(n - 1)) {
                best = best.max(phase_distance(model, &leg.state_at(k), &refined.state_at(k)));
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if shadow_distance > opts.epsilon {
        return Err(OrbitError::ShadowingExceeded {
            distance: shadow_distance,
            epsilon: opts.epsilon,
        });
    }
    Ok(RefinedOrbit {
        path,
        nodes,
        durations,
        iterations,
        residual: max_abs(&r),
        shadow_distance,
    })
}

/// Concatenate the legs of a closed shooting solution into one path.
fn assemble(
    model: &SurfaceModel,
    nodes: &[UnitTangentState],
    durations: &[f64],
    steps: &[usize],
    dt: f64,
) -> Result<GeodesicPath, OrbitError> {
    let opts = IntegrationOptions {
        closure_tol: 0.0,
        ..IntegrationOptions::default()
    };
    let pieces: Vec<GeodesicPath> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            integrate_geodesic_with(model, &nodes[i], durations[i], durations[i] / steps[i] as f64, &opts)
        })
        .collect::<Result<_, _>>()?;
    let mut samples: Vec<PathSample> = Vec::new();
    let mut deck_events = Vec::new();
    let mut t0 = 0.0;
    for (i, p) in pieces.iter().enumerate() {
        let offset = samples.len().saturating_sub(1);
        if i > 0 {
            samples.pop();
        }
        for e in &p.deck_events {
            deck_events.push(crate::geometry::DeckEvent {
                index: e.index + offset,
                word: e.word.clone(),
            });
        }
        samples.extend(p.samples.iter().map(|s| PathSample {
            t: s.t + t0,
            state: s.state,
            curvature: s.curvature,
        }));
        t0 += durations[i];
    }
    if let Some(last) = samples.last_mut() {
        last.t = t0;
    }
    let first = samples[0].state.expect("model has positions");
    let last = samples[samples.len() - 1].state.expect("model has positions");
    let residual = phase_distance(model, &first, &last);
    Ok(GeodesicPath {
        model: model.clone(),
        dt,
        samples,
        deck_events,
        closure: Some(Closure {
            period: t0,
            residual,
        }),
        origin: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{octagon, WarpProfile};
    use crate::lyapunov::closed_orbit_exponent;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn waist() -> (SurfaceModel, GeodesicPath) {
        let m = SurfaceModel::collar(WarpProfile::Cosh { a: 1.0 }, 3.0).unwrap();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 0.0], FRAC_PI_2), TAU, 1e-3)
            .unwrap();
        (m, p)
    }

    #[test]
    fn closed_input_is_a_fixed_point() {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let tau = octagon::translation_length();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 0.0], 0.0), tau, 1e-3).unwrap();
        let po = PseudoOrbit::from_closed_path(&p, 4).unwrap();
        let r = refine_closed_orbit(&m, &po, &RefineOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!((r.path.period().unwrap() - tau).abs() < 1e-12);
        for (a, b) in po.nodes.iter().zip(&r.nodes) {
            assert!(phase_distance(&m, a, b) < 1e-12);
        }
        assert!(r.shadow_distance < 1e-12);
    }

    #[test]
    fn perturbed_waist_converges() {
        let (m, p) = waist();
        let mut po = PseudoOrbit::from_closed_path(&p, 6).unwrap();
        for (i, v) in po.nodes.iter_mut().enumerate() {
            *v = v.rotated(if i % 2 == 0 { 1e-3 } else { -1e-3 });
        }
        let po = PseudoOrbit::new(m.clone(), po.nodes, po.durations, true, 0.1, 1e-3).unwrap();
        assert!(po.max_mismatch() > 1e-4);
        let r = refine_closed_orbit(&m, &po, &RefineOptions::default()).unwrap();
        assert!(r.residual < 1e-8);
        assert!((r.path.period().unwrap() - TAU).abs() < 1e-6);
        for s in &r.path.samples {
            assert!(s.state.unwrap().position[0].abs() < 1e-6);
        }
        let c = closed_orbit_exponent(&r.path).unwrap();
        assert!((c.exponent - 1.0).abs() < 1e-6);
    }

    #[test]
    fn perturbed_octagon_axis_converges() {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let tau = octagon::translation_length();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 0.0], 0.0), tau, 1e-3).unwrap();
        let po = PseudoOrbit::from_closed_path(&p, 4).unwrap();
        let nodes: Vec<_> = po
            .nodes
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let e = 1e-3 * (1.0 + i as f64);
                UnitTangentState::new([v.position[0] + e, v.position[1] - e], v.angle() + e)
            })
            .collect();
        let po = PseudoOrbit::new(m.clone(), nodes, po.durations, true, 0.1, 1e-3).unwrap();
        let r = refine_closed_orbit(&m, &po, &RefineOptions::default()).unwrap();
        assert!(r.residual < 1e-8);
        assert!((r.path.period().unwrap() - tau).abs() < 1e-6);
        assert!(r.shadow_distance < 0.1);
    }

    #[test]
    fn flat_band_violates_hypothesis() {
        let m = SurfaceModel::collar(
            WarpProfile::FlatBand {
                radius: 1.0,
                half_width: 0.5,
                a: 1.0,
            },
            3.0,
        )
        .unwrap();
        let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 0.0], FRAC_PI_2), TAU, 1e-3)
            .unwrap();
        let po = PseudoOrbit::from_closed_path(&p, 4).unwrap();
        assert!(matches!(
            refine_closed_orbit(&m, &po, &RefineOptions::default()),
            Err(OrbitError::HypothesisViolation(_))
        ));
    }

    #[test]
    fn large_mismatch_rejected() {
        let (m, p) = waist();
        let po = PseudoOrbit::from_closed_path(&p, 4).unwrap();
        let mut nodes = po.nodes.clone();
        nodes[1] = nodes[1].rotated(0.2);
        let po = PseudoOrbit::new(m.clone(), nodes, po.durations, true, 0.1, 1e-3).unwrap();
        assert!(matches!(
            refine_closed_orbit(&m, &po, &RefineOptions::default()),
            Err(OrbitError::HypothesisViolation(_))
        ));
    }
}
