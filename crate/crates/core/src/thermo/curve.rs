use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{io_err, PressureSource, ThermoError};
use crate::numeric::grid;

/// Pressure sampled on a uniform grid with one-sided derivatives.
///
/// `d_left[i] = (3P_i - 4P_{i-1} + P_{i-2}) / 2h` and
/// `d_right[i] = (-3P_i + 4P_{i+1} - P_{i+2}) / 2h`. Near the ends, where
/// the stencil does not fit, the two-point difference is used and at the
/// very first (last) point the left (right) derivative copies the other
/// side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub d_left: Vec<f64>,
    pub d_right: Vec<f64>,
    pub step: f64,
}

impl PressureCurve {
    /// Build from values on a uniform grid.
    pub fn from_samples(q: Vec<f64>, p: Vec<f64>) -> Result<Self, ThermoError> {
        let n = q.len();
        if n < 3 || p.len() != n {
            return Err(ThermoError::InvalidGrid(format!(
                "need at least 3 matching samples, got {} q and {} P",
                n,
                p.len()
            )));
        }
        let h = (q[n - 1] - q[0]) / (n - 1) as f64;
        if !(h > 0.0) {
            return Err(ThermoError::InvalidGrid("grid must be increasing".into()));
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(ThermoError::SourceFailure {
                q: q[i],
                message: "non-finite pressure".into(),
            });
        }
        let mut d_left = vec![0.0; n];
        let mut d_right = vec![0.0; n];
        for i in 0..n {
            d_left[i] = if i >= 2 {
                (3.0 * p[i] - 4.0 * p[i - 1] + p[i - 2]) / (2.0 * h)
            } else if i == 1 {
                (p[1] - p[0]) / h
            } else {
                f64::NAN
            };
            d_right[i] = if i + 2 < n {
                (-3.0 * p[i] + 4.0 * p[i + 1] - p[i + 2]) / (2.0 * h)
            } else if i + 1 < n {
                (p[i + 1] - p[i]) / h
            } else {
                f64::NAN
            };
        }
        d_left[0] = d_right[0];
        d_right[n - 1] = d_left[n - 1];
        Ok(Self {
            q,
            p,
            d_left,
            d_right,
            step: h,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Index of the grid point nearest to `q`.
    pub fn index_of(&self, q: f64) -> usize {
        let i = ((q - self.q[0]) / self.step).round();
        i.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    /// Value at a grid point (nearest index).
    pub fn value_at(&self, q: f64) -> f64 {
        self.p[self.index_of(q)]
    }

    /// Most negative second difference; a convex curve has this
    /// non-negative up to rounding.
    pub fn min_second_difference(&self) -> (usize, f64) {
        let mut worst = (0, f64::INFINITY);
        for i in 1..self.len() - 1 {
            let d2 = self.p[i + 1] - 2.0 * self.p[i] + self.p[i - 1];
            if d2 < worst.1 {
                worst = (i, d2);
            }
        }
        worst
    }

    pub fn same_grid(&self, other: &PressureCurve) -> bool {
        self.len() == other.len()
            && self
                .q
                .iter()
                .zip(&other.q)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}

/// Evaluate `source` on `[q_min, q_max]` with spacing `step` in parallel.
/// The output order and values do not depend on the thread count.
pub fn sample_pressure_curve<S: PressureSource>(
    source: &S,
    q_min: f64,
    q_max: f64,
    step: f64,
) -> Result<PressureCurve, ThermoError> {
    if !(q_min.is_finite() && q_max.is_finite() && step.is_finite()) {
        return Err(ThermoError::InvalidGrid("non-finite bounds".into()));
    }
    if !(q_max > q_min) || !(step > 0.0) {
        return Err(ThermoError::InvalidGrid(format!(
            "need q_min < q_max and step > 0 (got {q_min}, {q_max}, {step})"
        )));
    }
    let qs = grid(q_min, q_max, step);
    if qs.len() < 3 {
        return Err(ThermoError::InvalidGrid("fewer than 3 grid points".into()));
    }
    let results: Vec<Result<f64, ThermoError>> =
        qs.par_iter().map(|&q| source.pressure(q)).collect();
    let mut p = Vec::with_capacity(qs.len());
    for r in results {
        p.push(r?);
    }
    PressureCurve::from_samples(qs, p)
}

/// Write `(q, P, D_L, D_R)` as CSV.
pub fn write_curve_csv(path: &Path, curve: &PressureCurve) -> Result<(), ThermoError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    writeln!(f, "q,pressure,d_left,d_right").map_err(io_err)?;
    for i in 0..curve.len() {
        writeln!(
            f,
            "{},{},{},{}",
            curve.q[i], curve.p[i], curve.d_left[i], curve.d_right[i]
        )
        .map_err(io_err)?;
    }
    f.flush().map_err(io_err)
}
