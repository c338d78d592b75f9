use nalgebra::Complex;

use super::flow::warp_radius;
use super::{octagon, SurfaceModel, UnitTangentState};
use crate::numeric::wrap_angle;

/// Sasaki-type distance `sqrt(d(p, p')^2 + angle(v, v')^2)` between two
/// states of the same model.
///
/// The angle is measured between chart directions. On the octagon the
/// minimum is taken over images of the second state under the identity,
/// the side pairings and their products of length two. On collars the
/// base distance uses the metric at the mean `s`. For signal models the
/// distance is the time separation along the orbit.
pub fn phase_distance(model: &SurfaceModel, a: &UnitTangentState, b: &UnitTangentState) -> f64 {
    match model {
        SurfaceModel::ConstantNegative { k } => {
            let d = half_plane_distance(a.position, b.position) / k;
            combine(d, a, b)
        }
        SurfaceModel::OctagonHyperbolic { k } => {
            let d0 = disk_distance(a.position, b.position) / k;
            let best = combine(d0, a, b);
            // images of b under non-identity elements are at least
            // 2 * inradius - |a| - |b| away from a
            let inr = octagon::translation_length() / 2.0;
            let ra = disk_distance(a.position, [0.0, 0.0]);
            let rb = disk_distance(b.position, [0.0, 0.0]);
            if (inr - ra - rb) / k >= best {
                return best;
            }
            octagon::neighbour_elements()
                .iter()
                .skip(1)
                .map(|g| {
                    let gb = g.apply_state(b);
                    combine(disk_distance(a.position, gb.position) / k, a, &gb)
                })
                .fold(best, f64::min)
        }
        SurfaceModel::CollarProfile { warp, .. } => {
            let ds = a.position[0] - b.position[0];
            let f = warp_radius(warp, 0.5 * (a.position[0] + b.position[0]));
            let dth = wrap_angle(a.position[1] - b.position[1]);
            combine(ds.hypot(f * dth), a, b)
        }
        SurfaceModel::CurvatureSignal { .. } => (a.t - b.t).abs(),
    }
}

fn combine(d: f64, a: &UnitTangentState, b: &UnitTangentState) -> f64 {
    let da = wrap_angle(a.angle() - b.angle());
    d.hypot(da)
}

fn half_plane_distance(p: [f64; 2], q: [f64; 2]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let arg = 1.0 + (dx * dx + dy * dy) / (2.0 * p[1] * q[1]);
    arg.max(1.0).acosh()
}

pub(crate) fn disk_distance(p: [f64; 2], q: [f64; 2]) -> f64 {
    let z = Complex::new(p[0], p[1]);
    let w = Complex::new(q[0], q[1]);
    let num = 2.0 * (z - w).norm_sqr();
    let den = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr());
    (1.0 + num / den).max(1.0).acosh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn same_footpoint_right_angle() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let a = UnitTangentState::new([0.2, 1.3], 0.1);
        let b = UnitTangentState::new([0.2, 1.3], 0.1 + FRAC_PI_2);
        assert!((phase_distance(&m, &a, &b) - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn octagon_equivalent_states_coincide() {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let a = UnitTangentState::new([0.55, 0.1], 0.7);
        let b = octagon::generator(3).apply_state(&a);
        assert!(phase_distance(&m, &a, &b) < 1e-12);
        let c = octagon::generator(1).compose(&octagon::generator(6)).apply_state(&a);
        assert!(phase_distance(&m, &a, &c) < 1e-12);
    }

    #[test]
    fn half_plane_vertical_distance() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let a = UnitTangentState::new([0.0, 1.0], 0.0);
        let b = UnitTangentState::new([0.0, std::f64::consts::E], 0.0);
        assert!((phase_distance(&m, &a, &b) - 1.0).abs() < 1e-12);
    }
}
