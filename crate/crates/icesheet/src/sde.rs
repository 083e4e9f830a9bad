//! Monte Carlo integration of the multiplicative-noise SDE
//! `dX = f(X) dt + eps sqrt(X) dB` with reproducible ensembles.
//!
//! Euler-Maruyama with full truncation at 0: the sqrt diffusion is not
//! Lipschitz at the origin, and truncation keeps states nonnegative while
//! preserving the absorbing character of X = 0. Each path draws from its
//! own counter-based stream keyed by (seed, path index), so ensembles are
//! bit-identical regardless of thread count.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Integration and recording settings for an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Step (kyr).
    pub dt: f64,
    /// Horizon (kyr).
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Steps per recorded sample.
    pub record_stride: usize,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, n_paths: usize, seed: u64, record_stride: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
        }
        if horizon < dt {
            return Err(Error::InvalidParams(format!("horizon {horizon} must be >= dt {dt}")));
        }
        if n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be >= 1".into()));
        }
        if record_stride == 0 {
            return Err(Error::InvalidParams("record_stride must be >= 1".into()));
        }
        Ok(SimConfig { dt, horizon, n_paths, seed, record_stride })
    }

    /// Default stride keeping at most ~2000 recorded samples per path.
    pub fn auto_stride(dt: f64, horizon: f64) -> usize {
        let steps = (horizon / dt).round() as usize;
        (steps / 2000).max(1)
    }

    fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Recorded step indices: 0, stride, 2*stride, ..., plus the final step.
    fn record_indices(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut idx: Vec<usize> = (0..=n).step_by(self.record_stride).collect();
        if *idx.last().unwrap() != n {
            idx.push(n);
        }
        idx
    }
}

/// Recorded Monte Carlo sample paths.
#[derive(Debug, Clone, Serialize)]
pub struct PathEnsemble {
    /// Recorded instants (kyr), strictly increasing, starting at 0.
    pub times: Vec<f64>,
    /// `paths[p][k]` is X of path p at `times[k]` (km).
    pub paths: Vec<Vec<f64>>,
    pub x0: f64,
    pub config: SimConfig,
    pub params: ModelParams,
}

impl PathEnsemble {
    /// Index of the recorded time nearest to `t`.
    pub fn nearest_time_index(&self, t: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (k, &tk) in self.times.iter().enumerate() {
            let d = (tk - t).abs();
            if d < dist {
                dist = d;
                best = k;
            }
        }
        best
    }

    /// States of all paths at the recorded time nearest `t`.
    pub fn states_at(&self, t: f64) -> (f64, Vec<f64>) {
        let k = self.nearest_time_index(t);
        (self.times[k], self.paths.iter().map(|p| p[k]).collect())
    }
}

fn path_rng(seed: u64, path_index: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path_index as u64);
    rng
}

/// Integrate one path with Euler-Maruyama, full truncation at 0, recording
/// per the config. The normal stream is keyed by (seed, path_index).
pub fn simulate_path(
    x0: f64,
    params: &ModelParams,
    config: &SimConfig,
    path_index: usize,
) -> Result<Vec<f64>> {
    if x0 < 0.0 {
        return Err(Error::Domain(format!("simulate_path: X0 must be >= 0, got {x0}")));
    }
    params.validate()?;
    let eps = params.eps();
    let sqrt_dt = config.dt.sqrt();
    let mut rng = path_rng(config.seed, path_index);

    let record = config.record_indices();
    let mut out = Vec::with_capacity(record.len());
    let mut next_rec = 0;
    let mut x = x0;
    if record[next_rec] == 0 {
        out.push(x);
        next_rec += 1;
    }
    let n = config.n_steps();
    for step in 1..=n {
        let noise: f64 = StandardNormal.sample(&mut rng);
        x = (x + params.drift(x) * config.dt + eps * x.sqrt() * sqrt_dt * noise).max(0.0);
        if !x.is_finite() {
            return Err(Error::Integration { path_index, step });
        }
        if next_rec < record.len() && record[next_rec] == step {
            out.push(x);
            next_rec += 1;
        }
    }
    Ok(out)
}

/// Integrate `n_paths` independent paths. Output is bit-identical for
/// identical (seed, config, params) regardless of execution parallelism.
pub fn simulate_ensemble(x0: f64, params: &ModelParams, config: &SimConfig) -> Result<PathEnsemble> {
    let record = config.record_indices();
    let times: Vec<f64> = record.iter().map(|&k| k as f64 * config.dt).collect();
    let paths: Vec<Vec<f64>> = (0..config.n_paths)
        .into_par_iter()
        .map(|p| simulate_path(x0, params, config, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble { times, paths, x0, config: *config, params: *params })
}

/// Normalized histogram of ensemble states at one instant.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    /// Snapped recorded time (kyr).
    pub t: f64,
    pub bin_width: f64,
    /// Density per bin (1/km); bin i covers [i*w, (i+1)*w).
    pub density: Vec<f64>,
}

impl Histogram {
    /// Total mass, `sum(density) * bin_width`.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width
    }

    /// Center of the highest-density bin (ties toward smaller X).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (i, &d) in self.density.iter().enumerate() {
            if d > self.density[best] {
                best = i;
            }
        }
        (best as f64 + 0.5) * self.bin_width
    }
}

/// Histogram estimate of p(X, t), snapping t to the nearest recorded time.
/// The result integrates to 1 over its bins.
pub fn ensemble_density(ensemble: &PathEnsemble, t: f64, bin_width: f64) -> Result<Histogram> {
    if ensemble.paths.is_empty() {
        return Err(Error::EmptyInput("ensemble_density: no paths".into()));
    }
    if !(bin_width > 0.0) {
        return Err(Error::Domain(format!("ensemble_density: bin_width must be > 0, got {bin_width}")));
    }
    let (t_snap, states) = ensemble.states_at(t);
    let max_x = states.iter().cloned().fold(0.0_f64, f64::max);
    let n_bins = (max_x / bin_width).floor() as usize + 1;
    let mut counts = vec![0u64; n_bins];
    for &x in &states {
        let i = ((x / bin_width) as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    let norm = 1.0 / (states.len() as f64 * bin_width);
    Ok(Histogram {
        t: t_snap,
        bin_width,
        density: counts.iter().map(|&c| c as f64 * norm).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps0: f64) -> ModelParams {
        ModelParams::reference(eps0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0, 1, 0, 1).is_err());
        assert!(SimConfig::new(0.1, 0.05, 1, 0, 1).is_err());
        assert!(SimConfig::new(0.1, 1.0, 0, 0, 1).is_err());
        assert!(SimConfig::new(0.1, 1.0, 1, 0, 0).is_err());
        assert!(SimConfig::new(0.1, 1.0, 1, 0, 1).is_ok());
    }

    #[test]
    fn absorbing_origin() {
        let cfg = SimConfig::new(0.01, 10.0, 1, 7, 10).unwrap();
        let path = simulate_path(0.0, &params(0.1), &cfg, 0).unwrap();
        assert!(path.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn negative_x0_rejected() {
        let cfg = SimConfig::new(0.01, 1.0, 1, 7, 1).unwrap();
        assert!(simulate_path(-1.0, &params(0.0), &cfg, 0).is_err());
    }

    #[test]
    fn recording_includes_endpoints() {
        let cfg = SimConfig::new(0.01, 1.0, 2, 3, 7).unwrap();
        let ens = simulate_ensemble(500.0, &params(0.01), &cfg).unwrap();
        assert_eq!(ens.times[0], 0.0);
        assert!((ens.times.last().unwrap() - 1.0).abs() < 1e-12);
        assert!(ens.times.windows(2).all(|w| w[1] > w[0]));
        assert!(ens.paths.iter().all(|p| p[0] == 500.0));
        assert!(ens.paths.iter().all(|p| p.len() == ens.times.len()));
    }

    #[test]
    fn nonnegativity() {
        // strong noise near the origin exercises the truncation
        let cfg = SimConfig::new(0.01, 20.0, 8, 11, 10).unwrap();
        let ens = simulate_ensemble(30.0, &params(0.3), &cfg).unwrap();
        assert!(ens.paths.iter().flatten().all(|&x| x >= 0.0));
    }

    #[test]
    fn histogram_mass_is_one() {
        let cfg = SimConfig::new(0.01, 5.0, 64, 5, 10).unwrap();
        let ens = simulate_ensemble(1000.0, &params(0.1), &cfg).unwrap();
        let h = ensemble_density(&ens, 5.0, 10.0).unwrap();
        assert!((h.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_single_bin() {
        let cfg = SimConfig::new(0.01, 5.0, 16, 5, 10).unwrap();
        let ens = simulate_ensemble(1000.0, &params(0.0), &cfg).unwrap();
        let h = ensemble_density(&ens, 5.0, 5.0).unwrap();
        let occupied = h.density.iter().filter(|&&d| d > 0.0).count();
        assert_eq!(occupied, 1);
    }
}
