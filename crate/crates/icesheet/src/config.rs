//! Run configuration: flat `key = value` text with one section per
//! subcommand, unknown keys rejected. CLI flags override file values.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use std::collections::BTreeMap;
use std::path::Path;

/// Parsed config file: section -> key -> raw value.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

/// Keys accepted in the `[model]` section.
const MODEL_KEYS: &[&str] = &["sigma_m", "beta_per_kyr", "lambda", "r_km", "eps0"];

/// Keys accepted per subcommand section.
fn section_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "model" => Some(MODEL_KEYS),
        "equilibria" => Some(&[]),
        "potential" => Some(&["lambdas", "x_max_km", "n_samples"]),
        "cusp" => Some(&["r_min_km", "r_max_km", "lambda_min", "lambda_max", "n_r", "n_lambda"]),
        "simulate" => Some(&["x0_km", "t_end_kyr", "dt_kyr", "n_paths", "record_stride", "seed"]),
        "mlt" => Some(&[
            "x0_km", "t_end_kyr", "n_cells", "x_max_km", "dt_kyr", "output_stride", "init_width_cells",
        ]),
        "mpp" => Some(&["x0_km", "x1_km", "t1_kyr", "n_nodes", "solver", "substeps"]),
        "compare" => Some(&["x0_km", "x1_km", "t_max_kyr", "ratio_threshold", "n_cells", "x_max_km"]),
        "sweep" => Some(&["axis", "values", "x0_km", "t_end_kyr", "n_cells", "x_max_km"]),
        _ => None,
    }
}

impl ConfigFile {
    /// Parse and validate a config file. Every section and key must be
    /// known; values are checked when consumed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("model");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_string();
                if section_keys(&name).is_none() {
                    return Err(Error::Config(format!("line {}: unknown section [{}]", lineno + 1, name)));
                }
                current = name;
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let allowed = section_keys(&current).unwrap();
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{key}` in section [{current}]",
                    lineno + 1
                )));
            }
            sections.entry(current.clone()).or_default().insert(key, value);
        }
        Ok(ConfigFile { sections })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|m| m.get(key)).map(|s| s.as_str())
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key}: `{s}` is not a number"))),
        }
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key}: `{s}` is not a count"))),
        }
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse::<u64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key}: `{s}` is not an integer"))),
        }
    }

    /// Comma-separated float list.
    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(s) => parse_f64_list(s)
                .map(Some)
                .map_err(|e| Error::Config(format!("[{section}] {key}: {e}"))),
        }
    }

    /// Model parameters from the `[model]` section over built-in defaults,
    /// with the given overrides (from CLI flags) applied last.
    pub fn model_params(&self, overrides: &ModelOverrides) -> Result<ModelParams> {
        let sigma_m = overrides
            .sigma_m
            .or(self.get_f64("model", "sigma_m")?)
            .unwrap_or(6.25);
        let beta = overrides
            .beta_per_kyr
            .or(self.get_f64("model", "beta_per_kyr")?)
            .unwrap_or(1.0);
        let lambda = overrides
            .lambda
            .or(self.get_f64("model", "lambda")?)
            .unwrap_or(1.0e-3);
        let r_km = overrides.r_km.or(self.get_f64("model", "r_km")?).unwrap_or(-250.0);
        let eps0 = overrides.eps0.or(self.get_f64("model", "eps0")?).unwrap_or(0.01);
        ModelParams::new(sigma_m, beta, lambda, r_km, eps0).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Model-parameter overrides supplied on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelOverrides {
    pub sigma_m: Option<f64>,
    pub beta_per_kyr: Option<f64>,
    pub lambda: Option<f64>,
    pub r_km: Option<f64>,
    pub eps0: Option<f64>,
}

pub fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>().map_err(|_| format!("`{tok}` is not a number"))
        })
        .collect()
}
