use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LibraryOrbit, OrbitError, OrbitLibrary};
use crate::geometry::{flow_state, phase_distance, SurfaceModel, UnitTangentState};
use crate::jacobi::phi_u;
use crate::numeric::{bisect, wrap_angle};
use crate::symbolic::{Sft, SuspensionModel};

/// Geodesic-normal disc: footpoints within `radius` of the centre on the
/// curve through the centre orthogonal to its direction, crossed in the
/// direction of the centre vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub center: UnitTangentState,
    pub radius: f64,
}

impl Section {
    /// Signed chart distance of the footpoint of `v` from the section
    /// line, positive on the side the centre direction points to.
    pub fn defining_function(&self, model: &SurfaceModel, v: &UnitTangentState) -> f64 {
        let c = &self.center;
        let d = c.direction;
        match model {
            SurfaceModel::CollarProfile { warp, .. } => {
                let f = warp.eval(c.position[0]).0;
                let ds = v.position[0] - c.position[0];
                let dth = wrap_angle(v.position[1] - c.position[1]);
                ds * d[0] + f * dth * d[1]
            }
            _ => (v.position[0] - c.position[0]) * d[0] + (v.position[1] - c.position[1]) * d[1],
        }
    }

    fn base_distance(&self, model: &SurfaceModel, v: &UnitTangentState) -> f64 {
        let c = UnitTangentState {
            position: self.center.position,
            direction: v.direction,
            t: v.t,
        };
        phase_distance(model, v, &c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodingOptions {
    /// Refinement level `N`: cells are itineraries of length `2N + 1`.
    pub level: usize,
    /// Single-linkage radius of the level-0 clustering.
    pub epsilon0: f64,
    /// Level-0 clusters wider than this are rejected.
    pub max_cell_diameter: f64,
    /// Time tolerance of the crossing bisection.
    pub time_tol: f64,
}

impl Default for CodingOptions {
    fn default() -> Self {
        Self {
            level: 0,
            epsilon0: 0.1,
            max_cell_diameter: 0.5,
            time_tol: 1e-10,
        }
    }
}

/// A return of a library orbit to the section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub orbit: usize,
    /// Time after the first sample of the orbit, in `[0, period)`.
    pub time: f64,
    pub state: UnitTangentState,
    /// Time to the next crossing of the same orbit.
    pub return_time: f64,
    /// Integral of `phi_u` over the return.
    pub potential: f64,
    /// Level-0 cluster.
    pub cluster: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodingCell {
    pub id: usize,
    /// Indices into the crossing list.
    pub members: Vec<usize>,
    /// Level-0 clusters visited at offsets `-N..=N`.
    pub itinerary: Vec<usize>,
    pub diameter: f64,
    pub roof: f64,
    pub roof_spread: f64,
    pub potential: f64,
    pub potential_spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionCoding {
    pub section: Section,
    pub level: usize,
    pub epsilon0: f64,
    pub crossings: Vec<Crossing>,
    pub cells: Vec<CodingCell>,
    pub matrix: Vec<Vec<u8>>,
}

impl SectionCoding {
    pub fn max_diameter(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    /// The transition graph as a subshift of finite type.
    pub fn sft(&self) -> Result<Sft, OrbitError> {
        Ok(Sft::new(self.matrix.clone())?)
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.sft().map(|s| s.is_irreducible()).unwrap_or(false)
    }

    /// No two cells share an itinerary.
    pub fn itineraries_unique(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.cells.iter().all(|c| seen.insert(c.itinerary.clone()))
    }

    /// Suspension flow with the per-cell mean roof and potential.
    pub fn to_suspension(&self) -> Result<SuspensionModel, OrbitError> {
        let roof = self.cells.iter().map(|c| c.roof).collect();
        let pot = self.cells.iter().map(|c| c.potential).collect();
        Ok(SuspensionModel::new(self.sft()?, roof, pot)?
            .with_label(format!("section coding, level {}", self.level)))
    }

    pub fn save_json(&self, path: &Path) -> Result<(), OrbitError> {
        let s = serde_json::to_string_pretty(self).map_err(|e| OrbitError::Io(e.to_string()))?;
        std::fs::write(path, s).map_err(|e| OrbitError::Io(e.to_string()))
    }
}

/// Cumulative integral of `phi_u` at the samples of an orbit.
fn cumulative_potential(o: &LibraryOrbit) -> (Vec<f64>, Vec<f64>) {
    let t0 = o.path.samples[0].t;
    let t: Vec<f64> = o.path.samples.iter().map(|s| s.t - t0).collect();
    let f: Vec<f64> = o
        .path
        .samples
        .iter()
        .zip(&o.unstable_u)
        .map(|(s, &u)| phi_u(u, s.curvature))
        .collect();
    let mut c = vec![0.0; t.len()];
    for i in 1..t.len() {
        c[i] = c[i - 1] + 0.5 * (f[i] + f[i - 1]) * (t[i] - t[i - 1]);
    }
    (t, c)
}

fn interpolate(t: &[f64], y: &[f64], x: f64) -> f64 {
    let i = t.partition_point(|&s| s <= x).clamp(1, t.len() - 1);
    let w = ((x - t[i - 1]) / (t[i] - t[i - 1])).clamp(0.0, 1.0);
    y[i - 1] * (1.0 - w) + y[i] * w
}

/// Crossings of one orbit, sorted by time.
fn orbit_crossings(
    model: &SurfaceModel,
    index: usize,
    o: &LibraryOrbit,
    section: &Section,
    time_tol: f64,
) -> Result<Vec<(f64, UnitTangentState)>, OrbitError> {
    let p = &o.path;
    let t0 = p.samples[0].t;
    let mut out: Vec<(f64, UnitTangentState)> = Vec::new();
    for i in 0..p.len() - 1 {
        let a = p.state_at(i);
        let h = p.samples[i + 1].t - p.samples[i].t;
        if h <= 0.0 {
            continue;
        }
        let fa = section.defining_function(model, &a);
        let b = flow_state(model, &a, h, h, false)?;
        let fb = section.defining_function(model, &b);
        if !((fa <= 0.0 && fb > 0.0) || (fa < 0.0 && fb >= 0.0)) {
            continue;
        }
        let at = |d: f64| -> UnitTangentState {
            flow_state(model, &a, d, h, false).unwrap_or(a)
        };
        let d = bisect(
            |d| section.defining_function(model, &at(d)),
            0.0,
            h,
            time_tol,
            200,
        )
        .unwrap_or(0.0);
        let v = at(d);
        if section.base_distance(model, &v) > section.radius {
            continue;
        }
        let mut t = p.samples[i].t - t0 + d;
        if t >= o.period - 1e-9 {
            t -= o.period;
        }
        out.push((t.max(0.0), model.reduce(&v).0));
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-7);
    if out.len() > 1 && out[0].0 + o.period - out[out.len() - 1].0 < 1e-7 {
        out.pop();
    }
    if out.is_empty() {
        return Err(OrbitError::NoCrossing(format!("{} ({index})", o.label)));
    }
    Ok(out)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let n = self.0[j];
            self.0[j] = r;
            j = n;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index becomes the root
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

fn mean_spread(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (mean, hi - lo)
}

/// Code the returns of a library to a section.
///
/// Level-0 cells are single-linkage clusters of the crossings at radius
/// `epsilon0`, formed in crossing order. Level-`N` cells group crossings
/// by their length-`2N + 1` itinerary of level-0 clusters along their own
/// orbit. Transitions are the observed successor pairs; each cell carries
/// the mean and spread of the return time and of the `phi_u` integral over
/// the return.
pub fn build_markov_coding(
    model: &SurfaceModel,
    library: &OrbitLibrary,
    section: &Section,
    opts: &CodingOptions,
) -> Result<SectionCoding, OrbitError> {
    if !model.has_positions() {
        return Err(OrbitError::InvalidArgument(
            "sections need a model with positions".into(),
        ));
    }
    if library.is_empty() {
        return Err(OrbitError::InvalidArgument("empty library".into()));
    }
    let mut crossings = Vec::new();
    let mut per_orbit: Vec<Vec<usize>> = Vec::new();
    for (oi, o) in library.orbits.iter().enumerate() {
        if &o.path.model != model {
            return Err(OrbitError::InvalidArgument(format!(
                "orbit {} belongs to a different model",
                o.label
            )));
        }
        let list = orbit_crossings(model, oi, o, section, opts.time_tol)?;
        let (ts, cum) = cumulative_potential(o);
        let total = cum[cum.len() - 1];
        let m = list.len();
        let mut idx = Vec::with_capacity(m);
        for k in 0..m {
            let (t, v) = list[k];
            let tn = list[(k + 1) % m].0;
            let (return_time, potential) = if k + 1 < m {
                (tn - t, interpolate(&ts, &cum, tn) - interpolate(&ts, &cum, t))
            } else {
                (
                    tn + o.period - t,
                    total - interpolate(&ts, &cum, t) + interpolate(&ts, &cum, tn),
                )
            };
            idx.push(crossings.len());
            crossings.push(Crossing {
                orbit: oi,
                time: t,
                state: v,
                return_time,
                potential,
                cluster: 0,
            });
        }
        per_orbit.push(idx);
    }

    let n = crossings.len();
    let mut uf = UnionFind((0..n).collect());
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = phase_distance(model, &crossings[i].state, &crossings[j].state);
            dist[i][j] = d;
            dist[j][i] = d;
            if d <= opts.epsilon0 {
                uf.union(i, j);
            }
        }
    }
    let mut cluster_of_root: HashMap<usize, usize> = HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = uf.find(i);
        let c = *cluster_of_root.entry(r).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[c].push(i);
        crossings[i].cluster = c;
    }
    let diameter = |members: &[usize]| -> f64 {
        let mut d = 0.0f64;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                d = d.max(dist[i][j]);
            }
        }
        d
    };
    for (c, members) in clusters.iter().enumerate() {
        let d = diameter(members);
        if d > opts.max_cell_diameter {
            return Err(OrbitError::CellOverlap {
                cell: c,
                diameter: d,
                limit: opts.max_cell_diameter,
            });
        }
    }

    // itineraries
    let big_n = opts.level as isize;
    let mut itinerary = vec![Vec::new(); n];
    for idx in &per_orbit {
        let m = idx.len() as isize;
        for (k, &ci) in idx.iter().enumerate() {
            itinerary[ci] = (-big_n..=big_n)
                .map(|j| crossings[idx[(k as isize + j).rem_euclid(m) as usize]].cluster)
                .collect();
        }
    }
    let mut cell_of: Vec<usize> = vec![0; n];
    let mut by_itinerary: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let c = *by_itinerary.entry(itinerary[i].clone()).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[c].push(i);
        cell_of[i] = c;
    }
    let cells: Vec<CodingCell> = members
        .iter()
        .enumerate()
        .map(|(id, m)| {
            let r: Vec<f64> = m.iter().map(|&i| crossings[i].return_time).collect();
            let p: Vec<f64> = m.iter().map(|&i| crossings[i].potential).collect();
            let (roof, roof_spread) = mean_spread(&r);
            let (potential, potential_spread) = mean_spread(&p);
            CodingCell {
                id,
                members: m.clone(),
                itinerary: itinerary[m[0]].clone(),
                diameter: diameter(m),
                roof,
                roof_spread,
                potential,
                potential_spread,
            }
        })
        .collect();
    let mut matrix = vec![vec![0u8; cells.len()]; cells.len()];
    for idx in &per_orbit {
        for k in 0..idx.len() {
            let a = cell_of[idx[k]];
            let b = cell_of[idx[(k + 1) % idx.len()]];
            matrix[a][b] = 1;
        }
    }
    Ok(SectionCoding {
        section: section.clone(),
        level: opts.level,
        epsilon0: opts.epsilon0,
        crossings,
        cells,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{integrate_geodesic, octagon};
    use crate::orbits::Provenance;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn axes() -> (SurfaceModel, OrbitLibrary) {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let tau = octagon::translation_length();
        let mut lib = OrbitLibrary::new();
        for (i, a) in [0.0, FRAC_PI_4].iter().enumerate() {
            let p = integrate_geodesic(&m, &UnitTangentState::new([0.0, 0.0], *a), tau, 1e-3).unwrap();
            lib.insert_path(format!("axis{i}"), p, Provenance::direct()).unwrap();
        }
        (m, lib)
    }

    fn section() -> Section {
        Section {
            center: UnitTangentState::new([0.0, 0.0], FRAC_PI_8),
            radius: 0.5,
        }
    }

    #[test]
    fn single_orbit_is_a_cycle() {
        let (m, mut lib) = axes();
        lib.orbits.truncate(1);
        let c = build_markov_coding(&m, &lib, &section(), &CodingOptions::default()).unwrap();
        assert_eq!(c.cells.len(), 1);
        assert_eq!(c.matrix, vec![vec![1]]);
        let x = &c.crossings[0];
        assert!(x.time.abs() < 1e-9);
        assert!((x.return_time - octagon::translation_length()).abs() < 1e-9);
        // phi_u = -1 on the unit octagon
        assert!((x.potential + x.return_time).abs() < 1e-6);
    }

    #[test]
    fn disjoint_orbits_block_diagonal() {
        let (m, lib) = axes();
        let c = build_markov_coding(&m, &lib, &section(), &CodingOptions::default()).unwrap();
        assert_eq!(c.matrix, vec![vec![1, 0], vec![0, 1]]);
        assert!(!c.is_strongly_connected());
        assert!(c.itineraries_unique());
        let s = c.to_suspension().unwrap();
        assert!(s.flow_pressure(0.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn coarse_radius_overlaps() {
        let (m, lib) = axes();
        let opts = CodingOptions {
            epsilon0: 1.0,
            max_cell_diameter: 0.5,
            ..CodingOptions::default()
        };
        assert!(matches!(
            build_markov_coding(&m, &lib, &section(), &opts),
            Err(OrbitError::CellOverlap { .. })
        ));
    }

    #[test]
    fn missing_section_reported() {
        let (m, lib) = axes();
        let s = Section {
            center: UnitTangentState::new([0.0, 0.6], 0.0),
            radius: 0.05,
        };
        assert!(matches!(
            build_markov_coding(&m, &lib, &s, &CodingOptions::default()),
            Err(OrbitError::NoCrossing(_))
        ));
    }
}
