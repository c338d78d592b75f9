use std::path::{Path, PathBuf};

use rank1_thermo::geometry::SurfaceModel;
use rank1_thermo::symbolic::SuspensionModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    RiccatiValidate,
    AnosovBaseline,
    CornerDemo,
    LambdaEllSweep,
    SpectrumReport,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::RiccatiValidate,
        ExperimentName::AnosovBaseline,
        ExperimentName::CornerDemo,
        ExperimentName::LambdaEllSweep,
        ExperimentName::SpectrumReport,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::RiccatiValidate => "riccati-validate",
            ExperimentName::AnosovBaseline => "anosov-baseline",
            ExperimentName::CornerDemo => "corner-demo",
            ExperimentName::LambdaEllSweep => "lambda-ell-sweep",
            ExperimentName::SpectrumReport => "spectrum-report",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentName::RiccatiValidate => {
                "unstable Riccati solution, phi_u and chi along one orbit; closed-form Riccati checks"
            }
            ExperimentName::AnosovBaseline => {
                "ensemble of forward/backward exponents from seeded Liouville samples"
            }
            ExperimentName::CornerDemo => {
                "pressure of a calibrated suspension united with a zero component: corner at q = 1"
            }
            ExperimentName::LambdaEllSweep => {
                "closed-orbit library filtered away from the flat set for a range of ell"
            }
            ExperimentName::SpectrumReport => {
                "equilibrium sweep, Legendre spectrum, dimension spectrum and exponent range"
            }
        }
    }

    /// Whether the experiment draws random samples from the seed.
    pub fn is_sampled(&self) -> bool {
        matches!(self, ExperimentName::AnosovBaseline)
    }
}

impl std::str::FromStr for ExperimentName {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .iter()
            .find(|e| e.as_str() == s)
            .copied()
            .ok_or_else(|| CliError::Config(format!("unknown experiment {s:?}")))
    }
}

/// Numeric parameters; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Averaging horizon for exponents.
    pub horizon: f64,
    pub dt: f64,
    /// Span of the closed-form Riccati checks.
    pub span: f64,
    /// Coarse step for the step-halving order check.
    pub order_dt: f64,
    /// Tolerance for pointwise identities (phi_u, closed forms, E = h).
    pub tolerance: f64,
    /// Tolerance for exponent estimates.
    pub exponent_tolerance: f64,
    /// Tolerance for one-sided derivatives and slope ranges.
    pub slope_tolerance: f64,
    /// Tolerance for conjugate values.
    pub spectrum_tolerance: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    pub alpha_points: usize,
    /// `q` values of the equilibrium sweep.
    pub sweep_q: Vec<f64>,
    pub n_seeds: usize,
    pub ells: Vec<u32>,
    /// Refinement level of the section coding.
    pub level: usize,
    /// Add a bridged orbit and its section coding to octagon libraries.
    pub bridge: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            horizon: 50.0,
            dt: 1e-3,
            span: 50.0,
            order_dt: 0.05,
            tolerance: 1e-6,
            exponent_tolerance: 1e-4,
            slope_tolerance: 2e-3,
            spectrum_tolerance: 1e-4,
            q_min: -40.0,
            q_max: 40.0,
            q_step: 0.05,
            alpha_points: 400,
            sweep_q: (0..20).map(|i| -5.0 + 0.5 * i as f64).collect(),
            n_seeds: 16,
            ells: vec![1, 2, 5, 10, 20, 50],
            level: 0,
            bridge: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    /// Surface model for geometric experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<SurfaceModel>,
    /// Suspension model for symbolic experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suspension: Option<SuspensionModel>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName) -> Self {
        Self {
            experiment,
            model: None,
            suspension: None,
            params: Params::default(),
            seed: 0,
            out: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let c: Self = serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.params;
        let positive = [
            ("horizon", p.horizon),
            ("dt", p.dt),
            ("span", p.span),
            ("order_dt", p.order_dt),
            ("tolerance", p.tolerance),
            ("exponent_tolerance", p.exponent_tolerance),
            ("slope_tolerance", p.slope_tolerance),
            ("spectrum_tolerance", p.spectrum_tolerance),
            ("q_step", p.q_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("params.{name} must be positive, got {v}")));
            }
        }
        if p.dt > p.horizon.min(p.span) {
            return Err(CliError::Config(format!(
                "params.dt = {} exceeds the horizon or span",
                p.dt
            )));
        }
        if !(p.q_min.is_finite() && p.q_max.is_finite() && p.q_min < p.q_max) {
            return Err(CliError::Config(format!(
                "need params.q_min < params.q_max, got {} and {}",
                p.q_min, p.q_max
            )));
        }
        if (p.q_max - p.q_min) / p.q_step < 8.0 {
            return Err(CliError::Config("q grid needs at least 8 steps".into()));
        }
        if p.alpha_points < 2 {
            return Err(CliError::Config("params.alpha_points must be >= 2".into()));
        }
        if p.n_seeds == 0 {
            return Err(CliError::Config("params.n_seeds must be >= 1".into()));
        }
        if p.ells.is_empty() || p.ells.contains(&0) {
            return Err(CliError::Config("params.ells must be nonempty positive integers".into()));
        }
        if p.sweep_q.iter().any(|q| !q.is_finite()) {
            return Err(CliError::Config("params.sweep_q must be finite".into()));
        }
        if let Some(m) = &self.model {
            m.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rank1_thermo::geometry::WarpProfile;

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::new(ExperimentName::LambdaEllSweep);
        c.model = Some(
            SurfaceModel::collar(
                WarpProfile::FlatBand {
                    radius: 1.0,
                    half_width: 0.5,
                    a: 1.0,
                },
                3.0,
            )
            .unwrap(),
        );
        c.suspension = Some(SuspensionModel::calibrated_two_shift());
        c.seed = 7;
        c.params.dt = 0.1 / 3.0;
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn negative_dt_named() {
        let e = ExperimentConfig::from_json(
            r#"{"experiment": "riccati-validate", "params": {"dt": -0.01}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("dt"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"experiment": "corner-demo", "paramz": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "corner-dem"}"#).is_err());
    }

    #[test]
    fn names_parse() {
        for e in ExperimentName::ALL {
            assert_eq!(e.as_str().parse::<ExperimentName>().unwrap(), e);
        }
    }
}
