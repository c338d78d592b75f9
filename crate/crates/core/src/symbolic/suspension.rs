use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{discrete_pressure, Sft, SymbolicError};
use crate::numeric::brent_root;

/// Default central-difference step for `-dP/dq`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Suspension flow over an SFT: `roof[i]` is the return time of symbol
/// `i` and `potential[i]` the integral of the potential over that return.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuspensionRepr", into = "SuspensionRepr")]
pub struct SuspensionModel {
    sft: Sft,
    roof: Vec<f64>,
    potential: Vec<f64>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct SuspensionRepr {
    sft: Sft,
    roof: Vec<f64>,
    potential: Vec<f64>,
    #[serde(default)]
    label: String,
}

impl TryFrom<SuspensionRepr> for SuspensionModel {
    type Error = SymbolicError;
    fn try_from(r: SuspensionRepr) -> Result<Self, Self::Error> {
        SuspensionModel::new(r.sft, r.roof, r.potential).map(|m| m.with_label(r.label))
    }
}

impl From<SuspensionModel> for SuspensionRepr {
    fn from(m: SuspensionModel) -> Self {
        SuspensionRepr {
            sft: m.sft,
            roof: m.roof,
            potential: m.potential,
            label: m.label,
        }
    }
}

/// Equilibrium data of `q * potential` for the flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumStats {
    pub q: f64,
    pub pressure: f64,
    /// `chi(mu_q) = -dP/dq`.
    pub exponent: f64,
    /// `h(mu_q) = P(q) + q * chi(mu_q)`.
    pub entropy: f64,
    pub fd_step: f64,
}

impl SuspensionModel {
    pub fn new(sft: Sft, roof: Vec<f64>, potential: Vec<f64>) -> Result<Self, SymbolicError> {
        let n = sft.size();
        for v in [&roof, &potential] {
            if v.len() != n {
                return Err(SymbolicError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if let Some((i, &r)) = roof
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(SymbolicError::RoofNotPositive { index: i, value: r });
        }
        if let Some(i) = potential.iter().position(|p| !p.is_finite()) {
            return Err(SymbolicError::NonFiniteWeight { index: i });
        }
        Ok(Self {
            sft,
            roof,
            potential,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn sft(&self) -> &Sft {
        &self.sft
    }
    pub fn roof(&self) -> &[f64] {
        &self.roof
    }
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Weights `q * potential - c * roof`.
    pub fn weights(&self, q: f64, c: f64) -> Vec<f64> {
        self.potential
            .iter()
            .zip(&self.roof)
            .map(|(p, r)| q * p - c * r)
            .collect()
    }

    /// Flow pressure of `q * potential`.
    pub fn flow_pressure(&self, q: f64) -> Result<f64, SymbolicError> {
        flow_pressure(self, q)
    }

    /// Shift the potential by a multiple of the roof so that the flow
    /// pressure at `q = 1` vanishes.
    pub fn calibrated(&self) -> Result<Self, SymbolicError> {
        let c1 = self.flow_pressure(1.0)?;
        let potential = self
            .potential
            .iter()
            .zip(&self.roof)
            .map(|(p, r)| p - c1 * r)
            .collect();
        Ok(Self {
            sft: self.sft.clone(),
            roof: self.roof.clone(),
            potential,
            label: self.label.clone(),
        })
    }

    /// Same roof and potential on a sub-shift of the same alphabet.
    pub fn on_subshift(&self, sft: Sft) -> Result<Self, SymbolicError> {
        Self::new(sft, self.roof.clone(), self.potential.clone()).map(|m| m.with_label(&self.label))
    }

    /// Two-symbol full shift with unit roof; the potential values are
    /// `-log(4/3)` and `-log 4`, so the pressure is
    /// `log((3/4)^q + (1/4)^q)` and vanishes at `q = 1`.
    pub fn calibrated_two_shift() -> Self {
        Self::new(
            Sft::full(2),
            vec![1.0, 1.0],
            vec![-(4.0f64 / 3.0).ln(), -(4.0f64).ln()],
        )
        .expect("valid model")
        .with_label("calibrated-two-shift")
    }
}

/// Root `c` of `P_disc(q * potential - c * roof) = 0`.
///
/// `P_disc` is strictly decreasing in `c` since the roof is positive, and
/// the bracket `|c| <= (|q| max|potential| + log m) / min roof + 1`
/// always contains the root. The root is resolved to machine precision so
/// that finite differences in `q` stay accurate.
pub fn flow_pressure(model: &SuspensionModel, q: f64) -> Result<f64, SymbolicError> {
    let m = model.sft.size() as f64;
    let pmax = model.potential.iter().fold(0.0f64, |a, p| a.max(p.abs()));
    let rmin = model.roof.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound = (q.abs() * pmax + m.ln()) / rmin + 1.0;
    let err = std::cell::RefCell::new(None);
    let g = |c: f64| match discrete_pressure(&model.sft, &model.weights(q, c)) {
        Ok(p) => p,
        Err(e) => {
            *err.borrow_mut() = Some(e);
            f64::NAN
        }
    };
    let (glo, ghi) = (g(-bound), g(bound));
    if let Some(e) = err.borrow_mut().take() {
        return Err(e);
    }
    if !(glo > 0.0 && ghi < 0.0) {
        return Err(SymbolicError::NoBracket { q });
    }
    let root = brent_root(g, -bound, bound, 1e-300, 500);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    root.ok_or(SymbolicError::NoBracket { q })
}

/// Equilibrium statistics at `q` with `chi = -dP/dq` from a Richardson
/// extrapolated central difference of step `DEFAULT_FD_STEP`.
pub fn equilibrium_stats(model: &SuspensionModel, q: f64) -> Result<EquilibriumStats, SymbolicError> {
    equilibrium_stats_with_step(model, q, DEFAULT_FD_STEP)
}

pub fn equilibrium_stats_with_step(
    model: &SuspensionModel,
    q: f64,
    h: f64,
) -> Result<EquilibriumStats, SymbolicError> {
    let p = flow_pressure(model, q)?;
    let d1 = (flow_pressure(model, q + h)? - flow_pressure(model, q - h)?) / (2.0 * h);
    let d2 = (flow_pressure(model, q + 2.0 * h)? - flow_pressure(model, q - 2.0 * h)?) / (4.0 * h);
    let dp = (4.0 * d1 - d2) / 3.0;
    let chi = -dp;
    Ok(EquilibriumStats {
        q,
        pressure: p,
        exponent: chi,
        entropy: p + q * chi,
        fd_step: h,
    })
}

/// Write a `(q, pressure, exponent, entropy)` sweep as CSV.
pub fn write_sweep_csv(path: &Path, rows: &[EquilibriumStats]) -> Result<(), SymbolicError> {
    let io = |e: std::io::Error| SymbolicError::Io(e.to_string());
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "q,pressure,exponent,entropy").map_err(io)?;
    for r in rows {
        writeln!(f, "{},{},{},{}", r.q, r.pressure, r.exponent, r.entropy).map_err(io)?;
    }
    f.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::perron_vectors;

    fn closed_form(q: f64) -> f64 {
        (0.75f64.powf(q) + 0.25f64.powf(q)).ln()
    }

    /// chi from Perron vectors: -sum p_j potential_j / sum p_j roof_j with
    /// p_j proportional to left_j * right_j of the zero-pressure weights.
    fn analytic_exponent(model: &SuspensionModel, q: f64) -> f64 {
        let c = flow_pressure(model, q).unwrap();
        let pv = perron_vectors(model.sft(), &model.weights(q, c)).unwrap();
        let p: Vec<f64> = pv.left.iter().zip(&pv.right).map(|(l, r)| l * r).collect();
        let num: f64 = p.iter().zip(model.potential()).map(|(a, b)| a * b).sum();
        let den: f64 = p.iter().zip(model.roof()).map(|(a, b)| a * b).sum();
        -num / den
    }

    #[test]
    fn roof_two_halves_pressure() {
        let m = SuspensionModel::new(Sft::full(2), vec![2.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert!((m.flow_pressure(0.0).unwrap() - 2f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_two_shift_values() {
        let m = SuspensionModel::calibrated_two_shift();
        assert!(m.flow_pressure(1.0).unwrap().abs() < 1e-14);
        assert!((m.flow_pressure(0.0).unwrap() - 2f64.ln()).abs() < 1e-14);
        for q in [-40.0, -3.3, 0.5, 2.0, 40.0] {
            let p = m.flow_pressure(q).unwrap();
            assert!((p - closed_form(q)).abs() < 1e-12 * (1.0 + p.abs()), "q={q}");
        }
    }

    #[test]
    fn equilibrium_at_zero_and_one() {
        let m = SuspensionModel::calibrated_two_shift();
        let s0 = equilibrium_stats(&m, 0.0).unwrap();
        assert!((s0.exponent - 0.836988).abs() < 1e-6);
        assert!((s0.entropy - 2f64.ln()).abs() < 1e-9);
        let s1 = equilibrium_stats(&m, 1.0).unwrap();
        assert!((s1.exponent - 0.562335).abs() < 1e-6);
        assert!((s1.entropy - s1.exponent).abs() < 1e-9);
    }

    #[test]
    fn fd_exponent_matches_perron_oracle() {
        let m = SuspensionModel::new(
            Sft::golden_mean(),
            vec![1.3, 0.7],
            vec![-0.9, -0.4],
        )
        .unwrap();
        for q in [-3.0, -0.5, 0.0, 1.0, 2.5] {
            let s = equilibrium_stats(&m, q).unwrap();
            let a = analytic_exponent(&m, q);
            assert!((s.exponent - a).abs() < 1e-8, "q={q}: {} vs {a}", s.exponent);
        }
    }

    #[test]
    fn constant_potential_gives_constant_exponent() {
        let m = SuspensionModel::new(Sft::golden_mean(), vec![1.0, 1.0], vec![-1.7, -1.7]).unwrap();
        let s = equilibrium_stats(&m, 0.8).unwrap();
        assert!((s.exponent - 1.7).abs() < 1e-9);
    }

    #[test]
    fn calibration_zeroes_pressure_at_one() {
        let m = SuspensionModel::new(Sft::golden_mean(), vec![1.3, 0.7], vec![-0.2, -0.9])
            .unwrap()
            .calibrated()
            .unwrap();
        assert!(m.flow_pressure(1.0).unwrap().abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_roof() {
        let e = SuspensionModel::new(Sft::full(2), vec![1.0, 0.0], vec![0.0, 0.0]).unwrap_err();
        assert!(matches!(e, SymbolicError::RoofNotPositive { index: 1, .. }));
    }

    #[test]
    fn json_round_trip() {
        let m = SuspensionModel::calibrated_two_shift();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<SuspensionModel>(&s).unwrap(), m);
    }
}
