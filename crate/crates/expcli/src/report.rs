//! Report documents and their on-disk form.
//!
//! A run directory holds `report.json` plus flat CSV views of it. Nothing in
//! a report depends on wall-clock time or on the worker count, so identical
//! inputs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nbsm_core::protocol::Mode;
use nbsm_core::qstate::CMatrix;
use nbsm_core::tomography::CountTable;
use serde::{Deserialize, Serialize};

use crate::config::Kind;
use crate::{CliError, Result};

pub const FORMAT: &str = "nbsm-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeEntry {
    pub label: String,
    pub probability: f64,
    pub count: Option<u64>,
    /// Binomial standard error; `null` for exact runs.
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub name: String,
    /// `computational` or `bell`.
    pub basis: String,
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

impl MatrixEntry {
    pub fn new(name: impl Into<String>, basis: &str, m: &CMatrix) -> Self {
        let grid = |f: fn(&nbsm_core::qstate::C64) -> f64| {
            (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect()
        };
        Self { name: name.into(), basis: basis.to_owned(), real: grid(|z| z.re), imag: grid(|z| z.im) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEntry {
    pub outcome: String,
    pub target: String,
    pub fidelity: f64,
    pub std_error: Option<f64>,
    /// Externally supplied value for the same quantity, if configured.
    pub reference: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub version: String,
    pub kind: Kind,
    pub mode: Mode,
    pub seed: u64,
    pub shots: Option<u64>,
    /// The experiment file after command-line overrides.
    pub spec: serde_json::Value,
    pub outcomes: Vec<OutcomeEntry>,
    pub matrices: Vec<MatrixEntry>,
    pub fidelities: Vec<FidelityEntry>,
    pub summary: BTreeMap<String, f64>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Load `report.json`, either directly or from a run directory.
    pub fn load(path: &Path) -> Result<Self> {
        let file = if path.is_dir() { path.join("report.json") } else { path.to_owned() };
        let text = fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn matrix(&self, name: &str) -> Option<&MatrixEntry> {
        self.matrices.iter().find(|m| m.name == name)
    }

    pub fn fidelity(&self, outcome: &str) -> Option<&FidelityEntry> {
        self.fidelities.iter().find(|f| f.outcome == outcome)
    }

    /// Write `report.json`, `matrices.csv`, `outcomes.csv`, `fidelities.csv`
    /// and any count tables into `dir`. Returns the files written.
    pub fn write(&self, dir: &Path, tables: &[(String, CountTable)]) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::new();

        let path = dir.join("report.json");
        fs::write(&path, self.to_json()?).map_err(|e| CliError::io(&path, e))?;
        written.push(path);

        let path = dir.join("matrices.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["matrix", "part", "row", "col", "value"])?;
        for m in &self.matrices {
            for (part, grid) in [("re", &m.real), ("im", &m.imag)] {
                for (r, row) in grid.iter().enumerate() {
                    for (c, v) in row.iter().enumerate() {
                        w.write_record([m.name.as_str(), part, &r.to_string(), &c.to_string(), &v.to_string()])?;
                    }
                }
            }
        }
        finish(w, &path)?;
        written.push(path);

        let path = dir.join("outcomes.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["outcome", "probability", "count", "std_error"])?;
        for o in &self.outcomes {
            w.write_record([o.label.clone(), o.probability.to_string(), opt(o.count), opt(o.std_error)])?;
        }
        finish(w, &path)?;
        written.push(path);

        let path = dir.join("fidelities.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["outcome", "target", "fidelity", "std_error", "reference"])?;
        for f in &self.fidelities {
            w.write_record([
                f.outcome.clone(),
                f.target.clone(),
                f.fidelity.to_string(),
                opt(f.std_error),
                opt(f.reference),
            ])?;
        }
        finish(w, &path)?;
        written.push(path);

        for (name, table) in tables {
            let path = dir.join(name);
            let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            table.write_csv(file)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}
