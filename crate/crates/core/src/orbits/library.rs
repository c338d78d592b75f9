use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{refine_closed_orbit, OrbitError, PseudoOrbit, RefineOptions};
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::geometry::{
    integrate_geodesic, phase_distance, CurvatureSignal, GeodesicPath, SurfaceModel,
    UnitTangentState, WarpProfile,
};
use crate::lyapunov::closed_orbit_exponent;

/// How a library orbit was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
    pub shadow_distance: Option<f64>,
}

impl Provenance {
    pub fn direct() -> Self {
        Self {
            method: "direct".into(),
            iterations: 0,
            residual: 0.0,
            shadow_distance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LibraryOrbit {
    pub label: String,
    pub path: GeodesicPath,
    pub period: f64,
    pub exponent: f64,
    pub schwarz_bound: f64,
    pub mean_curvature: f64,
    /// Periodic unstable Riccati solution at the path samples.
    pub unstable_u: Vec<f64>,
    pub provenance: Provenance,
}

impl LibraryOrbit {
    /// Wrap a closed path, computing its exponent. Fails if the path is not
    /// closed or the Schwarz bound is violated.
    pub fn new(
        label: impl Into<String>,
        path: GeodesicPath,
        provenance: Provenance,
    ) -> Result<Self, OrbitError> {
        let label = label.into();
        let period = path.period().ok_or_else(|| OrbitError::NotClosed(label.clone()))?;
        let c = closed_orbit_exponent(&path)?;
        let t0 = path.samples[0].t;
        let unstable_u = path
            .samples
            .iter()
            .map(|s| interpolate(&c.t, &c.u, s.t - t0))
            .collect();
        Ok(Self {
            label,
            period,
            exponent: c.exponent,
            schwarz_bound: c.schwarz_bound,
            mean_curvature: c.mean_curvature,
            unstable_u,
            provenance,
            path,
        })
    }
}

fn interpolate(t: &[f64], y: &[f64], x: f64) -> f64 {
    let i = t.partition_point(|&s| s <= x).clamp(1, t.len() - 1);
    let (t0, t1) = (t[i - 1], t[i]);
    if t1 == t0 {
        return y[i];
    }
    let w = ((x - t0) / (t1 - t0)).clamp(0.0, 1.0);
    y[i - 1] * (1.0 - w) + y[i] * w
}

/// Thresholds defining the flat-indicator set: samples with
/// `|K| < kappa_flat` and `u < u_flat`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatThresholds {
    pub kappa_flat: f64,
    pub u_flat: f64,
}

impl FlatThresholds {
    /// `kappa_flat = 1e-3 max|K|`, `u_flat = 1e-2 sqrt(max(-K))` over the
    /// library samples.
    pub fn from_library(lib: &OrbitLibrary) -> Self {
        let (mut kabs, mut kneg) = (0.0f64, 0.0f64);
        for o in &lib.orbits {
            for s in &o.path.samples {
                kabs = kabs.max(s.curvature.abs());
                kneg = kneg.max(-s.curvature);
            }
        }
        Self {
            kappa_flat: 1e-3 * kabs,
            u_flat: 1e-2 * kneg.sqrt(),
        }
    }

    fn is_flat(&self, k: f64, u: f64) -> bool {
        k.abs() < self.kappa_flat && u < self.u_flat
    }

    /// Distance in feature space to the flat-indicator set.
    fn feature_gap(&self, k: f64, u: f64) -> f64 {
        (k.abs() - self.kappa_flat).max(u - self.u_flat).max(0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrbitLibrary {
    pub orbits: Vec<LibraryOrbit>,
    /// `1/ell` for a filtered library.
    pub exclusion_radius: Option<f64>,
    pub flat: Option<FlatThresholds>,
}

impl OrbitLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.orbits.iter().map(|o| o.label.as_str()).collect()
    }

    pub fn insert(&mut self, orbit: LibraryOrbit) {
        self.orbits.push(orbit);
    }

    /// Add a closed path under `label`.
    pub fn insert_path(
        &mut self,
        label: impl Into<String>,
        path: GeodesicPath,
        provenance: Provenance,
    ) -> Result<(), OrbitError> {
        self.orbits.push(LibraryOrbit::new(label, path, provenance)?);
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<(), OrbitError> {
        let s = serde_json::to_string(self).map_err(|e| OrbitError::Io(e.to_string()))?;
        std::fs::write(path, s).map_err(|e| OrbitError::Io(e.to_string()))
    }

    pub fn load_json(path: &Path) -> Result<Self, OrbitError> {
        let s = std::fs::read_to_string(path).map_err(|e| OrbitError::Io(e.to_string()))?;
        serde_json::from_str(&s).map_err(|e| OrbitError::Io(e.to_string()))
    }
}

/// Refine candidate pseudo-orbits in parallel. Successful orbits are
/// stored in candidate order; failures are returned with their labels.
pub fn build_library(
    candidates: &[(String, PseudoOrbit)],
    opts: &RefineOptions,
) -> (OrbitLibrary, Vec<(String, OrbitError)>) {
    let results: Vec<Result<LibraryOrbit, OrbitError>> = candidates
        .par_iter()
        .map(|(label, po)| {
            let r = refine_closed_orbit(&po.model, po, opts)?;
            LibraryOrbit::new(
                label.clone(),
                r.path,
                Provenance {
                    method: "multiple-shooting".into(),
                    iterations: r.iterations,
                    residual: r.residual,
                    shadow_distance: Some(r.shadow_distance),
                },
            )
        })
        .collect();
    let mut lib = OrbitLibrary::new();
    let mut failures = Vec::new();
    for ((label, _), r) in candidates.iter().zip(results) {
        match r {
            Ok(o) => lib.insert(o),
            Err(e) => failures.push((label.clone(), e)),
        }
    }
    (lib, failures)
}

/// Demonstration library mixing flat and negatively curved closed orbits.
///
/// `band` must be a collar with a flat-band warp. Its two parallel
/// circles at `s = 0` and `s = 0.6 * half_width` lie in the flat band.
/// The remaining orbits are plateau cycles of curvature `-a^2` with
/// `(period, fraction)` in `(4, .25), (4, .5), (6, .5), (4, .9)`.
pub fn mixed_flat_band_library(band: &SurfaceModel, dt: f64) -> Result<OrbitLibrary, OrbitError> {
    let (radius, half_width, a) = match band {
        SurfaceModel::CollarProfile {
            warp:
                WarpProfile::FlatBand {
                    radius,
                    half_width,
                    a,
                },
            ..
        } => (*radius, *half_width, *a),
        _ => {
            return Err(OrbitError::InvalidArgument(
                "mixed library needs a flat-band collar".into(),
            ))
        }
    };
    if !(a > 0.0) {
        return Err(OrbitError::InvalidArgument("flat band needs a > 0".into()));
    }
    let mut lib = OrbitLibrary::new();
    for s in [0.0, 0.6 * half_width] {
        let p = integrate_geodesic(band, &UnitTangentState::new([s, 0.0], FRAC_PI_2), TAU * radius, dt)?;
        lib.insert_path(format!("band{s}"), p, Provenance::direct())?;
    }
    for (period, frac) in [(4.0, 0.25), (4.0, 0.5), (6.0, 0.5), (4.0, 0.9)] {
        let m = SurfaceModel::signal(CurvatureSignal::plateau_cycle(period, frac, a))?;
        let p = integrate_geodesic(&m, &UnitTangentState::on_signal(0.0), period, dt)?;
        lib.insert_path(format!("plateau{period}-{frac}"), p, Provenance::direct())?;
    }
    Ok(lib)
}

struct FlatSample<'a> {
    orbit: &'a LibraryOrbit,
    state: UnitTangentState,
}

fn sample_stride(o: &LibraryOrbit) -> usize {
    let dt = if o.path.dt > 0.0 { o.path.dt } else { 1e-3 };
    ((0.01 / dt).round() as usize).max(1)
}

/// Keep the orbits whose every sample stays at distance at least `1/ell`
/// from the flat-indicator set.
///
/// The distance of a sample is the smaller of its phase distance to the
/// flat samples of the same model and its feature gap
/// `max(|K| - kappa_flat, u - u_flat, 0)`. Samples are taken about every
/// 0.01 time units. With no flat samples the library is returned
/// unchanged. `ell = 0` excludes every orbit that has any flat set to
/// avoid.
pub fn build_lambda_ell(
    library: &OrbitLibrary,
    ell: u32,
    thresholds: Option<FlatThresholds>,
) -> OrbitLibrary {
    let th = thresholds.unwrap_or_else(|| FlatThresholds::from_library(library));
    let radius = 1.0 / ell as f64;
    let mut flat = Vec::new();
    for o in &library.orbits {
        for (i, s) in o.path.samples.iter().enumerate() {
            if th.is_flat(s.curvature, o.unstable_u[i]) {
                flat.push(FlatSample {
                    orbit: o,
                    state: o.path.state_at(i),
                });
            }
        }
    }
    let keep: Vec<bool> = library
        .orbits
        .par_iter()
        .map(|o| {
            if flat.is_empty() {
                return true;
            }
            let stride = sample_stride(o);
            let same: Vec<&FlatSample> = flat
                .iter()
                .filter(|f| f.orbit.path.model == o.path.model)
                .collect();
            (0..o.path.len()).step_by(stride).all(|i| {
                let s = &o.path.samples[i];
                let gap = th.feature_gap(s.curvature, o.unstable_u[i]);
                if gap < radius {
                    return false;
                }
                let v = o.path.state_at(i);
                same.iter()
                    .all(|f| phase_distance(&o.path.model, &v, &f.state) >= radius)
            })
        })
        .collect();
    OrbitLibrary {
        orbits: library
            .orbits
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(o, _)| o.clone())
            .collect(),
        exclusion_radius: Some(radius),
        flat: Some(th),
    }
}
