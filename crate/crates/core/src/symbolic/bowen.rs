//! Pressure from periodic orbits, used as an independent oracle.

use super::{SuspensionModel, SymbolicError};
use crate::numeric::{brent_root, log_sum_exp};

const ENUMERATION_LIMIT: usize = 1 << 22;

/// Number of points of period `n` (words `x_0..x_{n-1}` closing up).
pub fn periodic_point_count(model: &SuspensionModel, n: usize) -> usize {
    let mut count = 0usize;
    enumerate(model, n, &mut |_, _| count += 1, usize::MAX);
    count
}

fn enumerate(
    model: &SuspensionModel,
    n: usize,
    visit: &mut dyn FnMut(f64, f64),
    limit: usize,
) -> bool {
    let sft = model.sft();
    let mut seen = 0usize;
    // explicit DFS over words, tracking Birkhoff sums
    for start in 0..sft.size() {
        let mut stack: Vec<(usize, usize, f64, f64)> =
            vec![(start, 1, model.potential()[start], model.roof()[start])];
        while let Some((sym, len, sp, sr)) = stack.pop() {
            if len == n {
                if sft.allowed(sym, start) {
                    seen += 1;
                    if seen > limit {
                        return false;
                    }
                    visit(sp, sr);
                }
                continue;
            }
            for next in sft.successors(sym).collect::<Vec<_>>().into_iter().rev() {
                stack.push((
                    next,
                    len + 1,
                    sp + model.potential()[next],
                    sr + model.roof()[next],
                ));
            }
        }
    }
    true
}

/// Solve `(1/n) log sum_{x in Fix(sigma^n)} exp(q S_n potential - c S_n roof) = 0`
/// for `c`, using the largest `n <= n_max` with periodic points.
pub fn bowen_orbit_pressure(
    model: &SuspensionModel,
    q: f64,
    n_max: usize,
) -> Result<f64, SymbolicError> {
    for n in (1..=n_max).rev() {
        let mut sums = Vec::new();
        if !enumerate(model, n, &mut |sp, sr| sums.push((sp, sr)), ENUMERATION_LIMIT) {
            return Err(SymbolicError::TooManyPeriodicPoints {
                limit: ENUMERATION_LIMIT,
            });
        }
        if sums.is_empty() {
            continue;
        }
        let g = |c: f64| log_sum_exp(sums.iter().map(|(sp, sr)| q * sp - c * sr)) / n as f64;
        let pmax = model.potential().iter().fold(0.0f64, |a, p| a.max(p.abs()));
        let rmin = model.roof().iter().cloned().fold(f64::INFINITY, f64::min);
        let m = model.sft().size() as f64;
        let bound = (q.abs() * pmax + m.ln()) / rmin + 1.0;
        return brent_root(g, -bound, bound, 1e-300, 500).ok_or(SymbolicError::NoBracket { q });
    }
    Err(SymbolicError::NoPeriodicPoints { n_max })
}
