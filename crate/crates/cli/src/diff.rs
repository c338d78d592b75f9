use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::report::{Manifest, SUMMARY_FILE};
use crate::{io, CliError};

/// One differing field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub file: String,
    /// `row:column` for CSV, a JSON pointer for JSON.
    pub field: String,
    pub a: String,
    pub b: String,
    /// `|a - b|` for numbers, infinite for other mismatches.
    pub difference: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub tolerance: f64,
    pub entries: Vec<DiffEntry>,
    /// Artifacts listed in only one manifest.
    pub missing: Vec<String>,
    /// Seed-dependent artifacts left out of the comparison.
    pub skipped_sampled: Vec<String>,
    /// `a / b` for every summary scalar named `*_error`.
    pub error_ratios: BTreeMap<String, f64>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.missing.is_empty()
    }
}

fn differs(x: f64, y: f64, tol: f64) -> bool {
    if x.is_nan() && y.is_nan() {
        return false;
    }
    if x == y {
        return false;
    }
    !((x - y).abs() <= tol * 1f64.max(x.abs()).max(y.abs()))
}

struct Collector<'a> {
    file: &'a str,
    tol: f64,
    entries: Vec<DiffEntry>,
}

impl Collector<'_> {
    fn push(&mut self, field: String, a: String, b: String, difference: f64) {
        self.entries.push(DiffEntry {
            file: self.file.into(),
            field,
            a,
            b,
            difference,
        });
    }

    fn cell(&mut self, field: String, a: &str, b: &str) {
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                if differs(x, y, self.tol) {
                    self.push(field, a.into(), b.into(), (x - y).abs());
                }
            }
            _ => {
                if a != b {
                    self.push(field, a.into(), b.into(), f64::INFINITY);
                }
            }
        }
    }

    fn json(&mut self, pointer: String, a: &Value, b: &Value) {
        match (a, b) {
            (Value::Number(x), Value::Number(y)) => {
                let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
                if differs(x, y, self.tol) {
                    self.push(pointer, x.to_string(), y.to_string(), (x - y).abs());
                }
            }
            (Value::Array(x), Value::Array(y)) => {
                if x.len() != y.len() {
                    self.push(
                        pointer.clone(),
                        format!("len {}", x.len()),
                        format!("len {}", y.len()),
                        f64::INFINITY,
                    );
                }
                for (i, (u, v)) in x.iter().zip(y).enumerate() {
                    self.json(format!("{pointer}/{i}"), u, v);
                }
            }
            (Value::Object(x), Value::Object(y)) => {
                for (k, u) in x {
                    match y.get(k) {
                        Some(v) => self.json(format!("{pointer}/{k}"), u, v),
                        None => self.push(format!("{pointer}/{k}"), u.to_string(), "absent".into(), f64::INFINITY),
                    }
                }
                for k in y.keys().filter(|k| !x.contains_key(*k)) {
                    self.push(format!("{pointer}/{k}"), "absent".into(), y[k].to_string(), f64::INFINITY);
                }
            }
            _ => {
                if a != b {
                    self.push(pointer, a.to_string(), b.to_string(), f64::INFINITY);
                }
            }
        }
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let s = std::fs::read_to_string(path).map_err(io)?;
    serde_json::from_str(&s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(io)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(io)?.iter().map(String::from).collect());
    }
    Ok(rows)
}

fn compare_file(dir_a: &Path, dir_b: &Path, file: &str, c: &mut Collector) -> Result<(), CliError> {
    let (pa, pb) = (dir_a.join(file), dir_b.join(file));
    if file.ends_with(".json") {
        c.json(String::new(), &read_json(&pa)?, &read_json(&pb)?);
    } else if file.ends_with(".csv") {
        let (ra, rb) = (read_csv(&pa)?, read_csv(&pb)?);
        if ra.len() != rb.len() {
            c.push("rows".into(), ra.len().to_string(), rb.len().to_string(), f64::INFINITY);
        }
        for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
            if x.len() != y.len() {
                c.push(format!("{i}"), format!("{} cells", x.len()), format!("{} cells", y.len()), f64::INFINITY);
            }
            for (j, (u, v)) in x.iter().zip(y).enumerate() {
                c.cell(format!("{i}:{j}"), u, v);
            }
        }
    } else {
        let (a, b) = (std::fs::read(&pa).map_err(io)?, std::fs::read(&pb).map_err(io)?);
        if a != b {
            c.push("bytes".into(), a.len().to_string(), b.len().to_string(), f64::INFINITY);
        }
    }
    Ok(())
}

/// Field-by-field comparison of two run directories.
///
/// Numbers agree when `|a - b| <= tol * max(1, |a|, |b|)`. Artifacts
/// flagged as sampled in either manifest are skipped.
pub fn diff_runs(dir_a: &Path, dir_b: &Path, tol: f64) -> Result<DiffReport, CliError> {
    let ma = Manifest::load(dir_a)?;
    let mb = Manifest::load(dir_b)?;
    let mut report = DiffReport {
        tolerance: tol,
        ..DiffReport::default()
    };
    let mut entries = Vec::new();
    for art in &ma.artifacts {
        let Some(other) = mb.artifacts.iter().find(|x| x.file == art.file) else {
            report.missing.push(art.file.clone());
            continue;
        };
        if art.sampled || other.sampled {
            report.skipped_sampled.push(art.file.clone());
            continue;
        }
        if art.sha256 == other.sha256 {
            continue;
        }
        let mut c = Collector {
            file: &art.file,
            tol,
            entries: Vec::new(),
        };
        compare_file(dir_a, dir_b, &art.file, &mut c)?;
        entries.extend(c.entries);
    }
    for art in &mb.artifacts {
        if !ma.artifacts.iter().any(|x| x.file == art.file) {
            report.missing.push(art.file.clone());
        }
    }
    report.entries = entries;

    let (sa, sb) = (dir_a.join(SUMMARY_FILE), dir_b.join(SUMMARY_FILE));
    if sa.exists() && sb.exists() {
        let (ja, jb) = (read_json(&sa)?, read_json(&sb)?);
        if let (Some(xa), Some(xb)) = (ja["scalars"].as_object(), jb["scalars"].as_object()) {
            for (k, v) in xa.iter().filter(|(k, _)| k.ends_with("_error")) {
                if let (Some(a), Some(b)) = (v.as_f64(), xb.get(k).and_then(Value::as_f64)) {
                    report.error_ratios.insert(k.clone(), a / b);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_tolerance() {
        assert!(!differs(1.0, 1.0 + 1e-13, 1e-12));
        assert!(differs(1.0, 1.0 + 1e-11, 1e-12));
        assert!(!differs(1e6, 1e6 * (1.0 + 1e-13), 1e-12));
        assert!(!differs(f64::NAN, f64::NAN, 1e-12));
    }

    #[test]
    fn json_walk() {
        let mut c = Collector {
            file: "x.json",
            tol: 1e-9,
            entries: Vec::new(),
        };
        let a = serde_json::json!({"a": [1.0, 2.0], "b": "s", "c": 1});
        let b = serde_json::json!({"a": [1.0, 2.5], "b": "t", "d": 1});
        c.json(String::new(), &a, &b);
        let fields: Vec<&str> = c.entries.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["/a/1", "/b", "/c", "/d"]);
        assert_eq!(c.entries[0].difference, 0.5);
    }
}
