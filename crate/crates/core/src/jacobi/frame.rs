use serde::{Deserialize, Serialize};

use super::{CurvatureHistory, JacobiError};

/// Perpendicular Jacobi field `j'' = -K j` with its derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiFrame {
    pub t: Vec<f64>,
    pub j: Vec<f64>,
    pub jp: Vec<f64>,
}

impl JacobiFrame {
    /// `log |(j, j')|` at each sample.
    pub fn log_norm(&self) -> Vec<f64> {
        self.j
            .iter()
            .zip(&self.jp)
            .map(|(a, b)| a.hypot(*b).ln())
            .collect()
    }
}

/// RK4 for the Jacobi equation with initial data `(j0, j0')` on
/// `[t0, t1]`. The pair is renormalised when it grows large; `log_norm`
/// differences across a renormalisation are not preserved, so callers
/// that need growth rates use short spans.
pub fn jacobi_frame<H: CurvatureHistory + ?Sized>(
    history: &H,
    init: (f64, f64),
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<JacobiFrame, JacobiError> {
    if !(t1 > t0) || !(dt > 0.0) {
        return Err(JacobiError::InvalidSpan(format!("[{t0}, {t1}] dt = {dt}")));
    }
    let n = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let f = |t: f64, y: [f64; 2]| [y[1], -history.curvature(t) * y[0]];
    let mut y = [init.0, init.1];
    let mut out = JacobiFrame {
        t: vec![t0],
        j: vec![y[0]],
        jp: vec![y[1]],
    };
    for i in 0..n {
        let s = t0 + i as f64 * h;
        let k1 = f(s, y);
        let k2 = f(s + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = f(s + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = f(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for c in 0..2 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        out.t.push(if i + 1 == n { t1 } else { t0 + (i + 1) as f64 * h });
        out.j.push(y[0]);
        out.jp.push(y[1]);
    }
    Ok(out)
}
