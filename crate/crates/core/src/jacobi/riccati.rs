use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CurvatureHistory, JacobiError, Reversed};

/// Threshold on `|u|` that signals a conjugate point.
pub const BLOW_UP: f64 = 1e6;
/// Default minimum window length for rank classification.
pub const DEFAULT_MIN_WINDOW: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Unstable,
    Stable,
    Raw,
}

/// Sampled solution of the Riccati equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiccatiTrace {
    pub branch: Branch,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub k: Vec<f64>,
    /// Burn-in used for the unstable/stable branches (0 for raw).
    pub burn_in: f64,
    /// Largest difference between the two seeds over the window.
    pub seed_gap: f64,
}

impl RiccatiTrace {
    pub fn phi_u(&self) -> Vec<f64> {
        self.u.iter().zip(&self.k).map(|(&u, &k)| phi_u(u, k)).collect()
    }

    pub fn last(&self) -> f64 {
        *self.u.last().expect("nonempty trace")
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// Write `t, u, K, phi_u` as CSV.
    pub fn write_csv(&self, path: &Path) -> Result<(), JacobiError> {
        let io = |e: std::io::Error| JacobiError::Io(e.to_string());
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(f, "t,u,K,phi_u").map_err(io)?;
        for i in 0..self.t.len() {
            writeln!(
                f,
                "{},{},{},{}",
                self.t[i],
                self.u[i],
                self.k[i],
                phi_u(self.u[i], self.k[i])
            )
            .map_err(io)?;
        }
        f.flush().map_err(io)
    }
}

/// `phi_u = -u (1 - K) / (1 + u^2)`.
pub fn phi_u(u: f64, k: f64) -> f64 {
    -u * (1.0 - k) / (1.0 + u * u)
}

fn check_span(t0: f64, t1: f64, dt: f64) -> Result<usize, JacobiError> {
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) || !(dt.is_finite() && dt > 0.0) {
        return Err(JacobiError::InvalidSpan(format!(
            "need t0 < t1 and dt > 0, got [{t0}, {t1}] with dt = {dt}"
        )));
    }
    Ok(((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize)
}

fn check_domain<H: CurvatureHistory + ?Sized>(h: &H, a: f64, b: f64) -> Result<(), JacobiError> {
    let (lo, hi) = h.domain();
    let slack = 1e-9 * (1.0 + a.abs().max(b.abs()));
    if a < lo - slack || b > hi + slack {
        return Err(JacobiError::InsufficientHistory {
            needed_from: a,
            needed_to: b,
            available_from: lo,
            available_to: hi,
        });
    }
    Ok(())
}

/// RK4 for `u' = -u^2 - K(t)` on `[t0, t1]` with about `dt` per step.
pub fn riccati_integrate<H: CurvatureHistory + ?Sized>(
    history: &H,
    u0: f64,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<RiccatiTrace, JacobiError> {
    let n = check_span(t0, t1, dt)?;
    check_domain(history, t0, t1)?;
    let h = (t1 - t0) / n as f64;
    let f = |t: f64, u: f64| -u * u - history.curvature(t);
    let mut t = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    let mut k = Vec::with_capacity(n + 1);
    let mut y = u0;
    t.push(t0);
    u.push(y);
    k.push(history.curvature(t0));
    for i in 0..n {
        let s = t0 + i as f64 * h;
        let k1 = f(s, y);
        let k2 = f(s + h / 2.0, y + h / 2.0 * k1);
        let k3 = f(s + h / 2.0, y + h / 2.0 * k2);
        let k4 = f(s + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let ts = if i + 1 == n { t1 } else { t0 + (i + 1) as f64 * h };
        if !y.is_finite() || y.abs() > BLOW_UP {
            return Err(JacobiError::BlowUp { t: ts });
        }
        t.push(ts);
        u.push(y);
        k.push(history.curvature(ts));
    }
    Ok(RiccatiTrace {
        branch: Branch::Raw,
        t,
        u,
        k,
        burn_in: 0.0,
        seed_gap: 0.0,
    })
}

/// Burn-in and seed-agreement settings for the unstable/stable branches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiccatiOptions {
    /// Defaults to `20 / sqrt(max(max(-K), 1e-3))` over the window.
    pub burn_in: Option<f64>,
    /// Largest allowed difference between the seeds `0` and
    /// `sqrt(max(-K))` over the window.
    pub seed_tol: f64,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            burn_in: None,
            seed_tol: 1e-6,
        }
    }
}

fn max_neg_curvature<H: CurvatureHistory + ?Sized>(h: &H, a: f64, b: f64, dt: f64) -> f64 {
    let n = (((b - a) / dt).ceil() as usize).max(1);
    (0..=n)
        .map(|i| -h.curvature(a + (b - a) * i as f64 / n as f64))
        .fold(0.0f64, f64::max)
}

/// Unstable solution on `window`: integrate from `window.0 - burn_in`
/// with the seeds `0` and `sqrt(max(-K))` and require them to agree on
/// the window. Returns the trace of the zero seed restricted to the
/// window.
pub fn unstable_riccati<H: CurvatureHistory + ?Sized>(
    history: &H,
    window: (f64, f64),
    dt: f64,
    opts: &RiccatiOptions,
) -> Result<RiccatiTrace, JacobiError> {
    let (a, b) = window;
    check_span(a, b, dt)?;
    let kmax_window = max_neg_curvature(history, a, b, dt);
    let burn = opts
        .burn_in
        .unwrap_or_else(|| 20.0 / kmax_window.max(1e-3).sqrt());
    if !(burn.is_finite() && burn > 0.0) {
        return Err(JacobiError::InvalidSpan(format!("burn-in {burn}")));
    }
    let start = a - burn;
    check_domain(history, start, b)?;
    let seed_hi = max_neg_curvature(history, start, b, dt).sqrt();
    // integrate on a grid that hits the window start exactly
    let n_burn = ((burn / dt) - 1e-9).ceil().max(1.0) as usize;
    let lo = riccati_integrate(history, 0.0, start, a, burn / n_burn as f64)?;
    let hi = riccati_integrate(history, seed_hi, start, a, burn / n_burn as f64)?;
    let w_lo = riccati_integrate(history, lo.last(), a, b, dt)?;
    let w_hi = riccati_integrate(history, hi.last(), a, b, dt)?;
    let gap = w_lo
        .u
        .iter()
        .zip(&w_hi.u)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if gap > opts.seed_tol {
        return Err(JacobiError::InsufficientBurnIn { gap, burn_in: burn });
    }
    Ok(RiccatiTrace {
        branch: Branch::Unstable,
        burn_in: burn,
        seed_gap: gap,
        ..w_lo
    })
}

/// Stable solution on `window`, obtained from the unstable solution of
/// the time-reversed history: `u_s(t) = -u(-t)`.
pub fn stable_riccati<H: CurvatureHistory + ?Sized>(
    history: &H,
    window: (f64, f64),
    dt: f64,
    opts: &RiccatiOptions,
) -> Result<RiccatiTrace, JacobiError> {
    let rev = Reversed(history);
    let tr = unstable_riccati(&rev, (-window.1, -window.0), dt, opts)?;
    let n = tr.t.len();
    let mut t = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut k = Vec::with_capacity(n);
    for i in (0..n).rev() {
        t.push(-tr.t[i]);
        u.push(-tr.u[i]);
        k.push(tr.k[i]);
    }
    Ok(RiccatiTrace {
        branch: Branch::Stable,
        t,
        u,
        k,
        burn_in: tr.burn_in,
        seed_gap: tr.seed_gap,
    })
}

/// Rank classification of an orbit segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankClass {
    pub higher_rank: bool,
    pub max_abs_curvature: f64,
    pub max_abs_slope: f64,
    pub window: (f64, f64),
}

/// `higher_rank` iff curvature and both Riccati slopes stay below `tol`
/// on the common window, i.e. the stable and unstable Jacobi fields are
/// both parallel and the segment looks flat.
pub fn rank_classify(
    unstable: &RiccatiTrace,
    stable: &RiccatiTrace,
    tol: f64,
    min_window: f64,
) -> Result<RankClass, JacobiError> {
    let (a, b) = unstable.span();
    let (c, d) = stable.span();
    if (a - c).abs() > 1e-9 || (b - d).abs() > 1e-9 || unstable.t.len() != stable.t.len() {
        return Err(JacobiError::TraceMismatch(
            "unstable and stable traces must share the window".into(),
        ));
    }
    if b - a < min_window {
        return Err(JacobiError::WindowTooShort {
            length: b - a,
            min: min_window,
        });
    }
    let max_abs_curvature = unstable.k.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let max_abs_slope = unstable
        .u
        .iter()
        .chain(&stable.u)
        .fold(0.0f64, |m, u| m.max(u.abs()));
    Ok(RankClass {
        higher_rank: max_abs_curvature < tol && max_abs_slope < tol,
        max_abs_curvature,
        max_abs_slope,
        window: (a, b),
    })
}
