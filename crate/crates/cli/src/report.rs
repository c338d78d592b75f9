use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{io, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ERROR_FILE: &str = "error.json";

// non-finite numbers are written as JSON null
fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nan_map<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
    let m = BTreeMap::<String, Option<f64>>::deserialize(d)?;
    Ok(m.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
}

/// One invariant checked by an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    /// Measured deviation (or value, for one-sided checks).
    #[serde(deserialize_with = "nan_if_null")]
    pub measured: f64,
    pub tolerance: f64,
}

impl Assertion {
    /// `|measured| <= tolerance`.
    pub fn within(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured.abs() <= tolerance,
            measured,
            tolerance,
        }
    }

    /// `measured <= tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            measured: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    #[serde(deserialize_with = "nan_map")]
    pub scalars: BTreeMap<String, f64>,
}

impl Summary {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            passed: true,
            ..Default::default()
        }
    }

    pub fn check(&mut self, a: Assertion) {
        self.passed &= a.passed;
        self.assertions.push(a);
    }

    pub fn scalar(&mut self, name: impl Into<String>, v: f64) {
        self.scalars.insert(name.into(), v);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
    /// Depends on the rng seed.
    pub sampled: bool,
}

impl Artifact {
    pub fn from_file(dir: &Path, file: &str, sampled: bool) -> Result<Self, CliError> {
        let data = std::fs::read(dir.join(file)).map_err(io)?;
        Ok(Self {
            file: file.into(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
            sampled,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub wall_time_seconds: f64,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let p = dir.join(MANIFEST_FILE);
        let s = std::fs::read_to_string(&p).map_err(|_| CliError::MissingManifest(p.clone()))?;
        serde_json::from_str(&s).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path).map_err(io)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| CliError::Io(e.to_string()))?;
    f.write_all(b"\n").map_err(io)
}

/// CSV with a header row and one row of floats per record.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string()))
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(io)
}
