use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::{io_err, PressureCurve, PressureSource, ThermoError, DEFAULT_ALPHA_POINTS};
use crate::numeric::golden_min;

/// Grid of exponent values. Missing bounds default to the slope range of
/// the curve (secant slopes at the two ends of the `q` grid), clipped
/// below at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaGrid {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub points: usize,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self {
            lo: None,
            hi: None,
            points: DEFAULT_ALPHA_POINTS,
        }
    }
}

/// One point of the spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub alpha: f64,
    /// `E(alpha) = inf_q (P(q) + q alpha)`; `-inf` when escaping.
    pub e: f64,
    /// `D(alpha) = E(alpha) / alpha`.
    pub d: f64,
    /// `1 + 2 D(alpha)`.
    pub dim: f64,
    /// Entropy of the grid minimiser `P(q*) + q* chi(q*)`.
    pub entropy: f64,
    pub q_star: f64,
    /// `alpha` outside the slope range of the curve.
    pub escaping: bool,
    /// `alpha < 10 * alpha_step`.
    pub unreliable: bool,
    /// Minimiser sits on the end of the `q` grid.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub rows: Vec<SpectrumRow>,
    pub alpha_step: f64,
    /// Slope range of the sampled curve.
    pub slope_lower: f64,
    pub slope_upper: f64,
}

impl SpectrumResult {
    /// Rows that are neither escaping nor numerically unreliable.
    pub fn stable_rows(&self) -> impl Iterator<Item = &SpectrumRow> {
        self.rows.iter().filter(|r| !r.escaping && !r.unreliable)
    }
}

fn check_convex(curve: &PressureCurve) -> Result<(), ThermoError> {
    let scale = curve.p.iter().fold(1.0f64, |a, p| a.max(p.abs()));
    let (i, d2) = curve.min_second_difference();
    if d2 < -1e-9 * scale {
        return Err(ThermoError::NonConvexInput {
            q: curve.q[i],
            second_difference: d2,
        });
    }
    Ok(())
}

fn slope_range(curve: &PressureCurve) -> (f64, f64) {
    let n = curve.len();
    let h = curve.step;
    let lower = -(curve.p[n - 1] - curve.p[n - 2]) / h;
    let upper = -(curve.p[1] - curve.p[0]) / h;
    (lower, upper)
}

fn conjugate_row(
    curve: &PressureCurve,
    source: Option<&dyn PressureSource>,
    alpha: f64,
    alpha_step: f64,
    range: (f64, f64),
) -> SpectrumRow {
    let n = curve.len();
    let tol = 1e-12 * (1.0 + alpha.abs());
    let escaping = alpha < range.0 - tol || alpha > range.1 + tol;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..n {
        let v = curve.p[i] + curve.q[i] * alpha;
        if v < best.1 {
            best = (i, v);
        }
    }
    let (istar, mut e) = best;
    let mut q_star = curve.q[istar];
    if let Some(src) = source {
        if !escaping {
            let a = curve.q[istar.saturating_sub(1)];
            let b = curve.q[(istar + 1).min(n - 1)];
            let (qm, vm) = golden_min(
                |q| src.pressure(q).map(|p| p + q * alpha).unwrap_or(f64::INFINITY),
                a,
                b,
                1e-12 * (1.0 + a.abs().max(b.abs())),
                200,
            );
            if vm < e {
                e = vm;
                q_star = qm;
            }
        }
    }
    let chi = -0.5 * (curve.d_left[istar] + curve.d_right[istar]);
    let entropy = curve.p[istar] + curve.q[istar] * chi;
    if escaping {
        e = f64::NEG_INFINITY;
    }
    let d = if alpha > 0.0 { e / alpha } else { f64::NAN };
    SpectrumRow {
        alpha,
        e,
        d,
        dim: 1.0 + 2.0 * d,
        entropy,
        q_star,
        escaping,
        unreliable: alpha < 10.0 * alpha_step,
        boundary: !escaping && (istar == 0 || istar == n - 1),
    }
}

fn conjugate_impl(
    curve: &PressureCurve,
    source: Option<&dyn PressureSource>,
    grid: &AlphaGrid,
) -> Result<SpectrumResult, ThermoError> {
    check_convex(curve)?;
    if grid.points < 2 {
        return Err(ThermoError::InvalidGrid("alpha grid needs 2 points".into()));
    }
    let range = slope_range(curve);
    let lo = grid.lo.unwrap_or(range.0.max(0.0));
    let hi = grid.hi.unwrap_or(range.1);
    if !(hi > lo) {
        return Err(ThermoError::InvalidGrid(format!(
            "empty alpha range [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (grid.points - 1) as f64;
    let rows = (0..grid.points)
        .into_par_iter()
        .map(|k| {
            let alpha = if k == grid.points - 1 {
                hi
            } else {
                lo + k as f64 * step
            };
            conjugate_row(curve, source, alpha, step, range)
        })
        .collect();
    Ok(SpectrumResult {
        rows,
        alpha_step: step,
        slope_lower: range.0,
        slope_upper: range.1,
    })
}

/// Discrete Legendre–Fenchel conjugate of a sampled convex curve.
pub fn legendre_conjugate(
    curve: &PressureCurve,
    grid: &AlphaGrid,
) -> Result<SpectrumResult, ThermoError> {
    conjugate_impl(curve, None, grid)
}

/// Conjugate with golden-section refinement of each grid minimiser
/// against the underlying source.
pub fn legendre_conjugate_with_source<S: PressureSource>(
    curve: &PressureCurve,
    source: &S,
    grid: &AlphaGrid,
) -> Result<SpectrumResult, ThermoError> {
    conjugate_impl(curve, Some(source), grid)
}

/// Conjugate at a single exponent value.
pub fn conjugate_at(
    curve: &PressureCurve,
    source: Option<&dyn PressureSource>,
    alpha: f64,
) -> SpectrumRow {
    let range = slope_range(curve);
    conjugate_row(curve, source, alpha, 0.0, range)
}

/// `sup_alpha (E(alpha) - q alpha)` over the non-escaping rows.
pub fn biconjugate(spectrum: &SpectrumResult, q: f64) -> f64 {
    spectrum
        .rows
        .iter()
        .filter(|r| !r.escaping)
        .map(|r| r.e - q * r.alpha)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Write `(alpha, E, D, dim, entropy, flags)` as CSV. Flags are
/// `escaping`, `unreliable` and `boundary`, joined by `|`.
pub fn write_spectrum_csv(path: &Path, spectrum: &SpectrumResult) -> Result<(), ThermoError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    writeln!(f, "alpha,E,D,dim,entropy,flags").map_err(io_err)?;
    for r in &spectrum.rows {
        let mut flags = Vec::new();
        if r.escaping {
            flags.push("escaping");
        }
        if r.unreliable {
            flags.push("unreliable");
        }
        if r.boundary {
            flags.push("boundary");
        }
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.alpha,
            r.e,
            r.d,
            r.dim,
            r.entropy,
            flags.join("|")
        )
        .map_err(io_err)?;
    }
    f.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{sample_pressure_curve, FnSource};

    #[test]
    fn parabola_conjugate() {
        // P(q) = q^2 / 2 has E(alpha) = -alpha^2 / 2
        let src = FnSource(|q: f64| 0.5 * q * q);
        let c = sample_pressure_curve(&src, -5.0, 5.0, 0.05).unwrap();
        let s = legendre_conjugate_with_source(
            &c,
            &src,
            &AlphaGrid {
                lo: Some(-4.0),
                hi: Some(4.0),
                points: 81,
            },
        )
        .unwrap();
        for r in &s.rows {
            assert!((r.e + 0.5 * r.alpha * r.alpha).abs() < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn rejects_concave_curve() {
        let c = sample_pressure_curve(&FnSource(|q: f64| -q * q), -1.0, 1.0, 0.1).unwrap();
        assert!(matches!(
            legendre_conjugate(&c, &AlphaGrid::default()),
            Err(ThermoError::NonConvexInput { .. })
        ));
    }

    #[test]
    fn escaping_flagged() {
        let c = sample_pressure_curve(&FnSource(|q: f64| -q), -1.0, 1.0, 0.1).unwrap();
        let r = conjugate_at(&c, None, 2.0);
        assert!(r.escaping);
        assert_eq!(r.e, f64::NEG_INFINITY);
        let r = conjugate_at(&c, None, 1.0);
        assert!(!r.escaping);
        assert!(r.e.abs() < 1e-12);
    }
}
