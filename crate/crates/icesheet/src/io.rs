//! CSV and JSON writers for all artifact outputs.
//!
//! Output contracts: RFC-4180-style CSV with a mandatory header row, `.`
//! decimal separator, UTF-8; JSON manifests with stable key order and no
//! timestamps, so identical runs produce identical bytes.

use crate::action::TransitionPath;
use crate::analysis::{MltMppComparison, SweepResult};
use crate::fokker_planck::{DensityField, MlTrajectory};
use crate::model::{EquilibriumSet, ModelParams, Stability};
use crate::sde::PathEnsemble;
use crate::error::Result;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Shortest round-trip float formatting (deterministic).
fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Ensemble CSV: one row per recorded time, one column per path.
pub fn ensemble_csv(ensemble: &PathEnsemble) -> String {
    let mut out = String::new();
    out.push_str("t_kyr");
    for p in 0..ensemble.paths.len() {
        write!(out, ",path_{p}").unwrap();
    }
    out.push('\n');
    for (k, &t) in ensemble.times.iter().enumerate() {
        out.push_str(&fmt(t));
        for path in &ensemble.paths {
            out.push(',');
            out.push_str(&fmt(path[k]));
        }
        out.push('\n');
    }
    out
}

/// Density CSV in matrix form: header `t_kyr,x_<center>...`, one row per
/// stored time with the density (1/km) per cell.
pub fn density_csv(field: &DensityField) -> String {
    let mut out = String::new();
    out.push_str("t_kyr");
    for i in 0..field.grid.n_cells {
        write!(out, ",x_{}", fmt(field.grid.center(i))).unwrap();
    }
    out.push('\n');
    for (k, &t) in field.times.iter().enumerate() {
        out.push_str(&fmt(t));
        for &p in &field.rows[k] {
            out.push(',');
            out.push_str(&fmt(p));
        }
        out.push('\n');
    }
    out
}

/// MLT CSV: `t_kyr,X_ml_km`.
pub fn mlt_csv(mlt: &MlTrajectory) -> String {
    let mut out = String::from("t_kyr,X_ml_km\n");
    for (t, x) in mlt.times.iter().zip(&mlt.x_ml) {
        writeln!(out, "{},{}", fmt(*t), fmt(*x)).unwrap();
    }
    out
}

/// Transition-path CSV: `t_kyr,z,X_km,Phi,H`.
pub fn transition_csv(path: &TransitionPath) -> String {
    let mut out = String::from("t_kyr,z,X_km,Phi,H\n");
    for j in 0..path.times.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt(path.times[j]),
            fmt(path.z[j]),
            fmt(path.x[j]),
            fmt(path.phi[j]),
            fmt(path.hamiltonian[j])
        )
        .unwrap();
    }
    out
}

/// Sweep CSV: `<axis>,terminal_mode_km,note`.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = format!("{},terminal_mode_km,note\n", sweep.axis);
    for i in 0..sweep.values.len() {
        writeln!(out, "{},{},{}", fmt(sweep.values[i]), fmt(sweep.outcomes[i]), sweep.notes[i]).unwrap();
    }
    out
}

/// Comparison CSV: `t_kyr,X_mlt_km,X_mpp_km`.
pub fn compare_csv(cmp: &MltMppComparison) -> String {
    let mut out = String::from("t_kyr,X_mlt_km,X_mpp_km\n");
    for j in 0..cmp.mpp.times.len() {
        writeln!(out, "{},{},{}", fmt(cmp.mpp.times[j]), fmt(cmp.mlt_x[j]), fmt(cmp.mpp.x[j])).unwrap();
    }
    out
}

/// The equilibria report written by the CLI.
#[derive(Debug, Serialize)]
pub struct EquilibriaReport {
    pub discriminant: f64,
    pub x_minus_km: Option<f64>,
    pub x_plus_km: Option<f64>,
    pub regime: String,
    pub states: Vec<StateReport>,
    pub params: ModelParams,
}

#[derive(Debug, Serialize)]
pub struct StateReport {
    pub x_km: f64,
    pub stability: Stability,
}

impl EquilibriaReport {
    pub fn from_set(set: &EquilibriumSet, params: &ModelParams) -> Self {
        let positive_stable = set.ice_covered();
        EquilibriaReport {
            discriminant: set.discriminant,
            x_minus_km: set.barrier(),
            x_plus_km: positive_stable,
            regime: format!("{:?}", set.regime).to_lowercase(),
            states: set
                .states
                .iter()
                .map(|s| StateReport { x_km: s.x, stability: s.stability })
                .collect(),
            params: *params,
        }
    }
}

/// Run manifest: enough provenance to reproduce the output byte-for-byte.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params: ModelParams,
    pub seed: Option<u64>,
    /// Numeric settings of the run, command-specific.
    pub settings: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, params: &ModelParams) -> Self {
        Manifest {
            tool: "icesheet",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            params: *params,
            seed: None,
            settings: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_settings<T: Serialize>(mut self, settings: &T) -> Result<Self> {
        self.settings = serde_json::to_value(settings)?;
        Ok(self)
    }

    pub fn with_outputs(mut self, outputs: &[&str]) -> Self {
        self.outputs = outputs.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// Write a string atomically enough for our purposes.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

/// Serialize to pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value)?)
}
