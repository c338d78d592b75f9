use serde::{Deserialize, Serialize};

use super::{conjugate_at, PressureCurve, ThermoError};

/// Convergence data for an increasing family of pressure curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    /// `sup |P_l - P_last|` over the window, per member.
    pub sup_gaps: Vec<f64>,
    pub gaps_strictly_decreasing: bool,
    pub alpha: Option<f64>,
    /// Intercept `E_l(alpha)` of the supporting line of slope `-alpha`;
    /// `None` when `alpha` is outside the member's slope range.
    pub supporting_intercepts: Vec<Option<f64>>,
}

/// Check `P_l <= P_{l+1}` on the whole grid (within `tol`), record the
/// sup-norm gap to the last member on `window`, and check that the
/// supporting lines at `alpha` are nondecreasing in `l`.
pub fn family_convergence(
    curves: &[PressureCurve],
    window: (f64, f64),
    alpha: Option<f64>,
    tol: f64,
) -> Result<FamilyReport, ThermoError> {
    if curves.is_empty() {
        return Err(ThermoError::InvalidGrid("empty family".into()));
    }
    if curves.iter().any(|c| !c.same_grid(&curves[0])) {
        return Err(ThermoError::GridMismatch);
    }
    for (ell, pair) in curves.windows(2).enumerate() {
        for i in 0..pair[0].len() {
            let excess = pair[0].p[i] - pair[1].p[i];
            if excess > tol {
                return Err(ThermoError::MonotonicityViolation {
                    ell,
                    q: pair[0].q[i],
                    excess,
                });
            }
        }
    }
    let last = curves.last().expect("nonempty");
    let sup_gaps: Vec<f64> = curves
        .iter()
        .map(|c| {
            (0..c.len())
                .filter(|&i| c.q[i] >= window.0 - 1e-12 && c.q[i] <= window.1 + 1e-12)
                .map(|i| (last.p[i] - c.p[i]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let gaps_strictly_decreasing = sup_gaps.windows(2).all(|w| w[1] < w[0]);
    let supporting_intercepts: Vec<Option<f64>> = match alpha {
        Some(a) => curves
            .iter()
            .map(|c| {
                let r = conjugate_at(c, None, a);
                (!r.escaping).then_some(r.e)
            })
            .collect(),
        None => vec![None; curves.len()],
    };
    if let Some(a) = alpha {
        let mut prev: Option<f64> = None;
        for (ell, e) in supporting_intercepts.iter().enumerate() {
            if let (Some(p), Some(e)) = (prev, e) {
                if *e < p - tol {
                    return Err(ThermoError::SupportingLineViolation {
                        ell: ell - 1,
                        alpha: a,
                    });
                }
            }
            if e.is_some() {
                prev = *e;
            }
        }
    }
    Ok(FamilyReport {
        sup_gaps,
        gaps_strictly_decreasing,
        alpha,
        supporting_intercepts,
    })
}

/// Largest gap in the sorted set `{entropies} ∪ {0}`, relative to the
/// largest entropy.
pub fn entropy_density_gap(entropies: &[f64]) -> f64 {
    let mut v: Vec<f64> = entropies.iter().cloned().filter(|h| h.is_finite()).collect();
    v.push(0.0);
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let hmax = v.last().cloned().unwrap_or(0.0);
    if hmax <= 0.0 {
        return 0.0;
    }
    v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max) / hmax
}
