//! Perron root of weighted transfer matrices `M_ij = A_ij * exp(w_i)`.

use super::{Sft, SymbolicError, ITERATION_CAP};

/// Right and left Perron vectors of an irreducible weighted matrix, with
/// the log of its spectral radius. Vectors are normalised to unit sum and
/// `left . right = 1` is not imposed.
#[derive(Clone, Debug)]
pub struct PerronVectors {
    pub log_root: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

fn check_weights(sft: &Sft, weights: &[f64]) -> Result<(), SymbolicError> {
    if weights.len() != sft.size() {
        return Err(SymbolicError::DimensionMismatch {
            expected: sft.size(),
            got: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(SymbolicError::NonFiniteWeight { index: i });
    }
    Ok(())
}

/// Dense matrix `A_ij * exp(w_i - w_max)` restricted to `symbols`.
fn scaled_matrix(sft: &Sft, weights: &[f64], symbols: &[usize]) -> (Vec<Vec<f64>>, f64) {
    let wmax = symbols
        .iter()
        .map(|&i| weights[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let m = symbols
        .iter()
        .map(|&i| {
            let e = (weights[i] - wmax).exp();
            symbols
                .iter()
                .map(|&j| if sft.allowed(i, j) { e } else { 0.0 })
                .collect()
        })
        .collect();
    (m, wmax)
}

fn matvec(m: &[Vec<f64>], x: &[f64], transpose: bool) -> Vec<f64> {
    let n = x.len();
    let mut y = vec![0.0; n];
    if transpose {
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                y[j] += v * x[i];
            }
        }
    } else {
        for (i, row) in m.iter().enumerate() {
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
    y
}

/// Shifted power iteration with Collatz–Wielandt stopping.
///
/// The shift by the current root estimate makes the iteration converge on
/// periodic (imprimitive) matrices as well. Stops when the bounds
/// `min (Mx)_i/x_i <= rho <= max (Mx)_i/x_i` agree to a few ulps, or when
/// they stop improving.
fn power_iteration(m: &[Vec<f64>], transpose: bool) -> Result<(f64, Vec<f64>), SymbolicError> {
    let n = m.len();
    if n == 1 {
        return Ok((m[0][0], vec![1.0]));
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut best_gap = f64::INFINITY;
    let mut stall = 0usize;
    let mut best = (0.0, x.clone());
    for it in 0..ITERATION_CAP {
        let y = matvec(m, &x, transpose);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let est = 0.5 * (lo + hi);
        let gap = hi - lo;
        if gap < best_gap {
            best_gap = gap;
            best = (est, x.clone());
            stall = 0;
        } else {
            stall += 1;
        }
        if gap <= 4.0 * f64::EPSILON * hi || (stall > 50 && best_gap <= 1e-11 * hi) {
            return Ok(best);
        }
        let s = est;
        let mut z: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| yi + s * xi).collect();
        let norm: f64 = z.iter().sum();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(SymbolicError::NoConvergence { iterations: it });
        }
        for v in &mut z {
            *v /= norm;
            // keep strictly positive against underflow
            if *v < 1e-300 {
                *v = 1e-300;
            }
        }
        x = z;
    }
    Err(SymbolicError::NoConvergence {
        iterations: ITERATION_CAP,
    })
}

/// `log` of the spectral radius of `A_ij exp(w_i)`.
///
/// Reducible matrices are handled by taking the maximum over nontrivial
/// strongly connected components.
pub fn log_spectral_radius(sft: &Sft, weights: &[f64]) -> Result<f64, SymbolicError> {
    check_weights(sft, weights)?;
    let mut best = f64::NEG_INFINITY;
    for comp in sft.nontrivial_components() {
        let (m, wmax) = scaled_matrix(sft, weights, &comp);
        let (rho, _) = power_iteration(&m, false)?;
        best = best.max(wmax + rho.ln());
    }
    Ok(best)
}

/// Perron data for an irreducible shift.
pub fn perron_vectors(sft: &Sft, weights: &[f64]) -> Result<PerronVectors, SymbolicError> {
    check_weights(sft, weights)?;
    if !sft.is_irreducible() {
        return Err(SymbolicError::DegenerateShift(
            "Perron vectors need an irreducible shift".into(),
        ));
    }
    let all: Vec<usize> = (0..sft.size()).collect();
    let (m, wmax) = scaled_matrix(sft, weights, &all);
    let (rho, right) = power_iteration(&m, false)?;
    let (_, left) = power_iteration(&m, true)?;
    Ok(PerronVectors {
        log_root: wmax + rho.ln(),
        right,
        left,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_matrix_converges() {
        // a 5-cycle is imprimitive with all eigenvalues on the unit circle
        let p = log_spectral_radius(&Sft::cycle(5), &[0.1, -0.2, 0.3, 0.0, 0.4]).unwrap();
        assert!((p - 0.6 / 5.0).abs() < 1e-13, "{p}");
    }

    #[test]
    fn reducible_takes_max_component() {
        let s = Sft::new(vec![vec![1, 1, 0], vec![1, 1, 0], vec![1, 0, 1]]).unwrap();
        // component {0,1} is a full 2-shift, {2} a fixed point with weight 2
        let p = log_spectral_radius(&s, &[0.0, 0.0, 2.0]).unwrap();
        assert!((p - 2.0).abs() < 1e-14);
        let p = log_spectral_radius(&s, &[0.0, 0.0, 0.1]).unwrap();
        assert!((p - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn large_weights_do_not_overflow() {
        let p = log_spectral_radius(&Sft::full(2), &[800.0, 800.0]).unwrap();
        assert!((p - 800.0 - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perron_vectors_are_eigenvectors() {
        let s = Sft::golden_mean();
        let w = [0.3, -0.4];
        let pv = perron_vectors(&s, &w).unwrap();
        let rho = pv.log_root.exp();
        for i in 0..2 {
            let mx: f64 = (0..2)
                .map(|j| if s.allowed(i, j) { w[i].exp() * pv.right[j] } else { 0.0 })
                .sum();
            assert!((mx - rho * pv.right[i]).abs() < 1e-13);
            let xm: f64 = (0..2)
                .map(|j| if s.allowed(j, i) { w[j].exp() * pv.left[j] } else { 0.0 })
                .sum();
            assert!((xm - rho * pv.left[i]).abs() < 1e-13);
        }
    }
}
