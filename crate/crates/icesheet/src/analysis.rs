//! Cross-method validation and figure experiments: density comparisons,
//! noise and parameter sweeps, threshold bisection, barrier-crossing
//! times, and MLT-vs-MPP comparison.

use crate::action::{most_probable_path_x, CollocationOptions, TransitionPath};
use crate::error::{Error, Result};
use crate::fokker_planck::{self, maximal_likely_trajectory, DensityField, FpeSettings, Grid1D, MlTrajectory};
use crate::model::{equilibria, ModelParams};
use crate::sde::PathEnsemble;
use rayon::prelude::*;
use serde::Serialize;

/// One-axis sweep outcome: one scalar per axis value.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axis: String,
    pub values: Vec<f64>,
    /// Terminal maximal-likely mode per value (km).
    pub outcomes: Vec<f64>,
    /// Per-point annotations (regime changes and the like); empty strings
    /// where nothing noteworthy happened.
    pub notes: Vec<String>,
}

/// Rebin ensemble states at (nearest) time t into grid-cell masses.
pub fn rebin_to_grid(ensemble: &PathEnsemble, t: f64, grid: &Grid1D) -> Result<Vec<f64>> {
    if ensemble.paths.is_empty() {
        return Err(Error::EmptyInput("rebin_to_grid: no paths".into()));
    }
    let (_, states) = ensemble.states_at(t);
    let mut masses = vec![0.0; grid.n_cells];
    let w = 1.0 / states.len() as f64;
    for &x in &states {
        masses[grid.cell_of(x)] += w;
    }
    Ok(masses)
}

/// L1 distance between two per-cell mass vectors.
pub fn l1_mass_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// L1 distance between a solved density and the ensemble histogram
/// rebinned to the density's grid, both taken at the stored/recorded time
/// nearest t.
pub fn density_distance(field: &DensityField, ensemble: &PathEnsemble, t: f64) -> Result<f64> {
    if field.rows.is_empty() {
        return Err(Error::EmptyInput("density_distance: empty field".into()));
    }
    let k = field.nearest_time_index(t);
    let h = field.grid.h();
    let fpe_masses: Vec<f64> = field.rows[k].iter().map(|&p| p * h).collect();
    let mc_masses = rebin_to_grid(ensemble, t, &field.grid)?;
    Ok(l1_mass_distance(&fpe_masses, &mc_masses))
}

fn terminal_mode(params: &ModelParams, x0: f64, t_end: f64, settings: &FpeSettings) -> Result<MlTrajectory> {
    let field = fokker_planck::solve(params, x0, t_end, settings)?;
    maximal_likely_trajectory(&field)
}

/// Terminal maximal-likely mode per noise amplitude. `noise_values` must be
/// strictly increasing.
pub fn mode_vs_noise(
    params: &ModelParams,
    x0: f64,
    noise_values: &[f64],
    t_end: f64,
    settings: &FpeSettings,
) -> Result<SweepResult> {
    if noise_values.is_empty() {
        return Err(Error::EmptyInput("mode_vs_noise: no noise values".into()));
    }
    if !noise_values.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Domain("mode_vs_noise: noise values must be strictly increasing".into()));
    }
    let runs: Vec<Result<MlTrajectory>> = noise_values
        .par_iter()
        .map(|&e| terminal_mode(&params.with_epsilon0(e), x0, t_end, settings))
        .collect();
    let mut outcomes = Vec::with_capacity(runs.len());
    let mut notes = Vec::with_capacity(runs.len());
    for r in runs {
        let mlt = r?;
        outcomes.push(mlt.terminal_state);
        notes.push(if mlt.converged { String::new() } else { "non-converged".into() });
    }
    Ok(SweepResult { axis: "epsilon0".into(), values: noise_values.to_vec(), outcomes, notes })
}

/// Which model parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamAxis {
    Lambda,
    R,
}

/// Terminal maximal-likely mode per parameter value, with regime-change
/// notes where the deterministic bistability is lost (discriminant <= 0).
pub fn mode_vs_params(
    params: &ModelParams,
    axis: ParamAxis,
    values: &[f64],
    x0: f64,
    t_end: f64,
    settings: &FpeSettings,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::EmptyInput("mode_vs_params: no values".into()));
    }
    if !values.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Domain("mode_vs_params: values must be strictly increasing".into()));
    }
    let vary = |v: f64| -> ModelParams {
        match axis {
            ParamAxis::Lambda => ModelParams { lambda: v, ..*params },
            ParamAxis::R => ModelParams { r: v, ..*params },
        }
    };
    let runs: Vec<Result<(MlTrajectory, f64)>> = values
        .par_iter()
        .map(|&v| {
            let p = vary(v);
            p.validate()?;
            let mlt = terminal_mode(&p, x0, t_end, settings)?;
            Ok((mlt, p.discriminant()))
        })
        .collect();
    let mut outcomes = Vec::with_capacity(runs.len());
    let mut notes = Vec::with_capacity(runs.len());
    for r in runs {
        let (mlt, delta) = r?;
        outcomes.push(mlt.terminal_state);
        notes.push(if delta <= 0.0 {
            format!("monostable (Delta = {delta:.4})")
        } else if mlt.converged {
            String::new()
        } else {
            "non-converged".into()
        });
    }
    Ok(SweepResult {
        axis: match axis {
            ParamAxis::Lambda => "lambda".into(),
            ParamAxis::R => "r_km".into(),
        },
        values: values.to_vec(),
        outcomes,
        notes,
    })
}

/// MLT minima below this count as touching zero: the mode on a truncated
/// grid never reaches 0 exactly.
pub const ZERO_TOUCH_KM: f64 = 1.0;

/// Outcome of the zero-touch bisection.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdResult {
    /// Midpoint of the final bracket (km).
    pub x_star: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Bisection on X0 for the predicate "the MLT's minimum over time drops
/// below 1 km". Returns an error report when the predicate is constant
/// over the bracket.
pub fn zero_touch_threshold(
    params: &ModelParams,
    t_end: f64,
    bisection_tol: f64,
    bracket: (f64, f64),
    settings: &FpeSettings,
) -> Result<ThresholdResult> {
    let set = equilibria(params)?;
    if set.barrier().is_none() {
        return Err(Error::Domain("zero_touch_threshold: parameters are not bistable".into()));
    }
    if !(bisection_tol > 0.0) || !(bracket.0 < bracket.1) || bracket.0 <= 0.0 {
        return Err(Error::Domain(format!(
            "zero_touch_threshold: bad tolerance {bisection_tol} or bracket {bracket:?}"
        )));
    }
    let dips = |x0: f64| -> Result<bool> {
        let mlt = terminal_mode(params, x0, t_end, settings)?;
        Ok(mlt.min_mode() < ZERO_TOUCH_KM)
    };
    let (mut lo, mut hi) = bracket;
    let d_lo = dips(lo)?;
    let d_hi = dips(hi)?;
    let mut evals = 2;
    if d_lo == d_hi {
        return Err(Error::NoThreshold { predicate_lo: d_lo, predicate_hi: d_hi });
    }
    while hi - lo > bisection_tol {
        let mid = 0.5 * (lo + hi);
        let d_mid = dips(mid)?;
        evals += 1;
        if d_mid == d_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult { x_star: 0.5 * (lo + hi), bracket: (lo, hi), evaluations: evals })
}

/// First time a sampled trajectory crosses `level` downward, by linear
/// interpolation between nodes. None when it never crosses.
pub fn barrier_crossing_time(times: &[f64], xs: &[f64], level: f64) -> Option<f64> {
    debug_assert_eq!(times.len(), xs.len());
    for k in 0..xs.len().saturating_sub(1) {
        if xs[k] >= level && xs[k + 1] < level {
            let frac = (xs[k] - level) / (xs[k] - xs[k + 1]);
            return Some(times[k] + frac * (times[k + 1] - times[k]));
        }
    }
    None
}

/// First crossing of `level` from either side.
fn first_arrival(times: &[f64], xs: &[f64], level: f64) -> Option<f64> {
    for k in 0..xs.len().saturating_sub(1) {
        let (a, b) = (xs[k], xs[k + 1]);
        if (a - level) == 0.0 {
            return Some(times[k]);
        }
        if (a - level) * (b - level) <= 0.0 && a != b {
            let frac = (a - level) / (a - b);
            return Some(times[k] + frac * (times[k + 1] - times[k]));
        }
    }
    None
}

/// Paired MLT and MPP between the same states, with their sup-distance.
#[derive(Debug, Clone, Serialize)]
pub struct MltMppComparison {
    /// Arrival time of the MLT at X1, used as the transition horizon.
    pub t1: f64,
    /// MLT resampled on the MPP mesh (km).
    pub mlt_x: Vec<f64>,
    pub mpp: TransitionPath,
    pub sup_distance: f64,
    /// Range of the MLT over [0, t1] (km).
    pub range: f64,
    /// sup_distance / range.
    pub ratio: f64,
    /// ratio <= the configured coincidence threshold.
    pub coincident: bool,
}

/// Default classification threshold: trajectories within 5% of their range
/// count as coincident.
pub const COINCIDENCE_RATIO: f64 = 0.05;

/// Compute the MLT from x0, take its first arrival at x1 as the horizon,
/// solve the MPP over that horizon, and compare pointwise.
pub fn compare_mlt_mpp(
    x0: f64,
    x1: f64,
    params: &ModelParams,
    t_max: f64,
    settings: &FpeSettings,
    opts: &CollocationOptions,
    ratio_threshold: f64,
) -> Result<MltMppComparison> {
    let field = fokker_planck::solve(params, x0, t_max, settings)?;
    let mlt = maximal_likely_trajectory(&field)?;
    let mut t1 = first_arrival(&mlt.times, &mlt.x_ml, x1)
        .ok_or(Error::ArrivalUndefined { target: x1 })?;
    if t1 <= 0.0 {
        // already at X1: any horizon is admissible; use the full window
        t1 = t_max;
    }
    let mpp = most_probable_path_x(x0, x1, t1, params, opts)?;

    // resample the MLT onto the MPP mesh
    let mlt_x: Vec<f64> = mpp
        .times
        .iter()
        .map(|&t| {
            let k = mlt.times.partition_point(|&tk| tk <= t).min(mlt.times.len() - 1).max(1);
            let (ta, tb) = (mlt.times[k - 1], mlt.times[k]);
            let (xa, xb) = (mlt.x_ml[k - 1], mlt.x_ml[k]);
            xa + (xb - xa) * (t - ta) / (tb - ta)
        })
        .collect();
    let sup = mlt_x
        .iter()
        .zip(&mpp.x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    let in_window: Vec<f64> = mlt
        .times
        .iter()
        .zip(&mlt.x_ml)
        .filter(|(t, _)| **t <= t1)
        .map(|(_, &x)| x)
        .collect();
    let lo = in_window.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = in_window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    let ratio = sup / range;
    Ok(MltMppComparison {
        t1,
        mlt_x,
        mpp,
        sup_distance: sup,
        range,
        ratio,
        coincident: ratio <= ratio_threshold,
    })
}
