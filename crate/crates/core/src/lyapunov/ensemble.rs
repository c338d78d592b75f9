use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exponent_estimate, ExponentEstimate, LyapunovError};
use crate::geometry::{SurfaceModel, UnitTangentState};
use crate::jacobi::RiccatiOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub dt: f64,
    pub riccati: RiccatiOptions,
    pub bins: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            riccati: RiccatiOptions::default(),
            bins: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub index: usize,
    pub state: UnitTangentState,
    pub estimate: Option<ExponentEstimate>,
    /// Error message when the estimate failed (e.g. chart escape).
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpectrum {
    pub seeds: Vec<SeedResult>,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

/// Sample `n_seeds` Liouville-uniform states from a ChaCha stream seeded
/// with `rng_seed` and estimate both exponents for each in parallel.
/// Results are ordered by seed index, so the output does not depend on
/// the number of threads.
pub fn ensemble_sample(
    model: &SurfaceModel,
    n_seeds: usize,
    horizon: f64,
    rng_seed: u64,
    opts: &EnsembleOptions,
) -> Result<EnsembleSpectrum, LyapunovError> {
    if n_seeds == 0 {
        return Err(LyapunovError::InvalidArgument("n_seeds must be >= 1".into()));
    }
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let states: Vec<UnitTangentState> = (0..n_seeds).map(|_| model.sample_state(&mut rng)).collect();
    let seeds: Vec<SeedResult> = states
        .into_par_iter()
        .enumerate()
        .map(|(index, state)| {
            match exponent_estimate(model, &state, horizon, opts.dt, &opts.riccati) {
                Ok(e) => SeedResult {
                    index,
                    state,
                    estimate: Some(e),
                    failure: None,
                },
                Err(e) => SeedResult {
                    index,
                    state,
                    estimate: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    let values: Vec<f64> = seeds
        .iter()
        .filter_map(|s| s.estimate.as_ref().map(|e| e.chi_plus))
        .collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let top = model.max_negative_curvature().sqrt().max(max).max(1e-12);
    let bins = opts.bins.max(1);
    let edges: Vec<f64> = (0..=bins).map(|i| top * i as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    for v in &values {
        let b = ((v / top) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[b] += 1;
    }
    Ok(EnsembleSpectrum {
        seeds,
        min,
        max,
        histogram: Histogram { edges, counts },
    })
}

impl EnsembleSpectrum {
    /// Write `seed, x, y, angle, t, chi_plus, chi_minus, gap` as CSV.
    pub fn write_csv(&self, path: &Path) -> Result<(), LyapunovError> {
        let io = |e: std::io::Error| LyapunovError::Io(e.to_string());
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(f, "seed,x,y,angle,t,chi_plus,chi_minus,gap").map_err(io)?;
        for s in &self.seeds {
            let v = &s.state;
            write!(
                f,
                "{},{},{},{},{},",
                s.index,
                v.position[0],
                v.position[1],
                v.angle(),
                v.t
            )
            .map_err(io)?;
            match &s.estimate {
                Some(e) => writeln!(
                    f,
                    "{},{},{}",
                    e.chi_plus,
                    e.chi_minus.unwrap_or(f64::NAN),
                    e.gap.unwrap_or(f64::NAN)
                ),
                None => writeln!(f, "NaN,NaN,NaN"),
            }
            .map_err(io)?;
        }
        f.flush().map_err(io)
    }

    /// JSON summary with the range, histogram and per-seed failures.
    pub fn summary_json(&self) -> serde_json::Value {
        let failed: Vec<serde_json::Value> = self
            .seeds
            .iter()
            .filter_map(|s| {
                s.failure
                    .as_ref()
                    .map(|f| serde_json::json!({"seed": s.index, "reason": f}))
            })
            .collect();
        serde_json::json!({
            "seeds": self.seeds.len(),
            "failures": failed.len(),
            "failed_seeds": failed,
            "min": self.min,
            "max": self.max,
            "histogram": self.histogram,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurvatureSignal;

    #[test]
    fn constant_curvature_ensemble() {
        let m = SurfaceModel::constant_negative(1.0).unwrap();
        let e = ensemble_sample(&m, 100, 10.0, 7, &Default::default()).unwrap();
        assert!(e.seeds.iter().all(|s| {
            let x = s.estimate.as_ref().unwrap().chi_plus;
            (x - 1.0).abs() < 1e-4
        }));
    }

    #[test]
    fn deterministic() {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let a = ensemble_sample(&m, 16, 5.0, 42, &Default::default()).unwrap();
        let b = ensemble_sample(&m, 16, 5.0, 42, &Default::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn mixed_plateaus_spread() {
        // plateaus of increasing length separated by unit negative blocks
        let mut breaks = Vec::new();
        let mut values = vec![-1.0];
        let mut t = 0.0;
        for i in 0..40 {
            t += 2.0;
            breaks.push(t);
            values.push(0.0);
            t += 0.5 + (i % 7) as f64 * 1.5;
            breaks.push(t);
            values.push(-1.0);
        }
        let m = SurfaceModel::signal(CurvatureSignal::Steps { breaks, values }).unwrap();
        let e = ensemble_sample(&m, 24, 10.0, 3, &Default::default()).unwrap();
        assert!(e.min < e.max);
        assert!(e.min >= 0.0);
        let inner: usize = e.histogram.counts[1..e.histogram.counts.len() - 1].iter().sum();
        assert!(inner > 0);
    }
}
