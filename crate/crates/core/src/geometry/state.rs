use serde::{Deserialize, Serialize};

/// A unit tangent vector in chart coordinates.
///
/// `direction` is a unit vector in the orthonormal frame of the metric at
/// `position`. For curvature-signal models `position` is unused and `t`
/// locates the state along the abstract orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitTangentState {
    pub position: [f64; 2],
    pub direction: [f64; 2],
    pub t: f64,
}

impl UnitTangentState {
    pub fn new(position: [f64; 2], angle: f64) -> Self {
        Self {
            position,
            direction: [angle.cos(), angle.sin()],
            t: 0.0,
        }
    }

    /// State on an abstract orbit at time `t`.
    pub fn on_signal(t: f64) -> Self {
        Self {
            position: [0.0, 0.0],
            direction: [1.0, 0.0],
            t,
        }
    }

    pub fn angle(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }

    /// Same footpoint, direction rotated by `beta`.
    pub fn rotated(&self, beta: f64) -> Self {
        Self::new(self.position, self.angle() + beta).at_time(self.t)
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub(crate) fn normalised(mut self) -> Self {
        let n = self.direction[0].hypot(self.direction[1]);
        self.direction = [self.direction[0] / n, self.direction[1] / n];
        self
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.direction).all(|v| v.is_finite()) && self.t.is_finite()
    }
}
