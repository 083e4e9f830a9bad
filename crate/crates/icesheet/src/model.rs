//! Closed-form model layer: drift, diffusion, potential, ice-thickness
//! profile, equilibria with cusp classification, and the transform to
//! additive noise.
//!
//! Working units are kilometers and kiloyears throughout. With the
//! mass-balance rate expressed per kiloyear the reference parameter set is
//! `sigma = 6.25 m`, `beta = 1/kyr`, `lambda = 1e-3`, `r = -250 km`, which
//! puts the nontrivial equilibria at 63.9 km and 1738.6 km.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Meters per kilometer, for boundary conversions only.
const M_PER_KM: f64 = 1000.0;

/// Physical and noise parameters of the reduced ice-sheet model.
///
/// All lengths are stored in kilometers, rates per kiloyear. The effective
/// noise amplitude `eps = beta * epsilon0 / sqrt(2 sigma)` is derived on
/// demand and never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Yield-stress parameter (km).
    pub sigma: f64,
    /// Mass-balance rate (1/kyr).
    pub beta: f64,
    /// Mass-balance slope (dimensionless).
    pub lambda: f64,
    /// Distance of the ice-sheet origin from the polar ocean (km, <= 0).
    pub r: f64,
    /// Noise amplitude knob (dimensionless, >= 0).
    pub epsilon0: f64,
}

impl ModelParams {
    /// Build from boundary units: sigma in meters (as tabulated), r in km.
    pub fn new(sigma_m: f64, beta_per_kyr: f64, lambda: f64, r_km: f64, epsilon0: f64) -> Result<Self> {
        let p = ModelParams {
            sigma: sigma_m / M_PER_KM,
            beta: beta_per_kyr,
            lambda,
            r: r_km,
            epsilon0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Reference parameter set: sigma = 6.25 m, beta = 1/kyr,
    /// lambda = 0.001, r = -250 km.
    pub fn reference(epsilon0: f64) -> Result<Self> {
        ModelParams::new(6.25, 1.0, 1.0e-3, -250.0, epsilon0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParams(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParams(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.r <= 0.0) {
            return Err(Error::InvalidParams(format!("r must be <= 0, got {}", self.r)));
        }
        if !(self.epsilon0 >= 0.0) {
            return Err(Error::InvalidParams(format!("epsilon0 must be >= 0, got {}", self.epsilon0)));
        }
        Ok(())
    }

    /// Same parameters with a different noise amplitude.
    pub fn with_epsilon0(mut self, epsilon0: f64) -> Self {
        self.epsilon0 = epsilon0;
        self
    }

    #[inline]
    pub fn sqrt_2sigma(&self) -> f64 {
        (2.0 * self.sigma).sqrt()
    }

    /// Effective noise amplitude `eps = beta * epsilon0 / sqrt(2 sigma)`.
    #[inline]
    pub fn eps(&self) -> f64 {
        self.beta * self.epsilon0 / self.sqrt_2sigma()
    }

    /// `eps^2 = beta^2 epsilon0^2 / (2 sigma)`.
    #[inline]
    pub fn eps_sq(&self) -> f64 {
        let e = self.beta * self.epsilon0;
        e * e / (2.0 * self.sigma)
    }

    /// Deterministic drift, unchecked. `drift_f` is the validating entry.
    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        let sx = x.sqrt();
        -(self.beta * self.lambda / self.sqrt_2sigma()) * (0.75 * x * sx - self.r * sx)
            + self.beta * x / 3.0
    }

    /// df/dX. Singular at X = 0 when r != 0.
    #[inline]
    pub fn drift_prime(&self, x: f64) -> f64 {
        let sx = x.sqrt();
        -(self.beta * self.lambda / self.sqrt_2sigma()) * (1.125 * sx - self.r / (2.0 * sx))
            + self.beta / 3.0
    }

    /// Potential U with -dU/dX = f, U(0) = 0.
    #[inline]
    pub fn potential(&self, x: f64) -> f64 {
        let sx = x.sqrt();
        (self.beta * self.lambda / self.sqrt_2sigma())
            * (0.3 * x * x * sx - (2.0 / 3.0) * self.r * x * sx)
            - self.beta * x * x / 6.0
    }

    /// Discriminant of the quadratic in sqrt(X): `1 + 27 r lambda^2 / (2 sigma)`.
    #[inline]
    pub fn discriminant(&self) -> f64 {
        1.0 + 27.0 * self.r * self.lambda * self.lambda / (2.0 * self.sigma)
    }
}

/// Deterministic drift f(X) (km/kyr). X must be >= 0.
pub fn drift_f(x: f64, params: &ModelParams) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("drift_f: X must be >= 0, got {x}")));
    }
    Ok(params.drift(x))
}

/// Diffusion g(X) = sqrt(X). X must be >= 0.
pub fn diffusion_g(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("diffusion_g: X must be >= 0, got {x}")));
    }
    Ok(x.sqrt())
}

/// Potential U(X) with -U' = f and U(0) = 0. X must be >= 0.
pub fn potential_u(x: f64, params: &ModelParams) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("potential_u: X must be >= 0, got {x}")));
    }
    Ok(params.potential(x))
}

/// Stability of a deterministic fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    /// Double root at the fold (Delta = 0).
    SemiStable,
}

/// Regime of the deterministic system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// A single stable state (either 0 alone, or the r = 0 case).
    Monostable,
    /// Ice-free and ice-covered states separated by the barrier.
    Bistable,
    /// Fold point: double root at Delta = 0.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    /// Location (km).
    pub x: f64,
    pub stability: Stability,
}

/// Deterministic fixed points with stability classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub discriminant: f64,
    pub states: Vec<Equilibrium>,
    pub regime: Regime,
}

impl EquilibriumSet {
    /// The unstable barrier state, if the system is bistable.
    pub fn barrier(&self) -> Option<f64> {
        self.states
            .iter()
            .find(|s| s.x > 0.0 && s.stability == Stability::Unstable)
            .map(|s| s.x)
    }

    /// The largest stable state, if any positive one exists.
    pub fn ice_covered(&self) -> Option<f64> {
        self.states
            .iter()
            .filter(|s| s.x > 0.0 && s.stability == Stability::Stable)
            .map(|s| s.x)
            .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
    }
}

/// Tolerance below which the discriminant counts as exactly at the fold.
const FOLD_TOL: f64 = 1.0e-12;

/// Roots of f(X) = 0 with stability labels.
///
/// Dividing f by sqrt(X) gives a quadratic in y = sqrt(X) whose positive
/// roots are `X_pm = (8 sigma / (81 lambda^2)) (1 pm sqrt(Delta))^2`.
/// X = 0 is always an equilibrium; its stability follows the sign of f
/// just above 0 (negative for r < 0, positive for r = 0).
pub fn equilibria(params: &ModelParams) -> Result<EquilibriumSet> {
    params.validate()?;
    let delta = params.discriminant();
    let base = 8.0 * params.sigma / (81.0 * params.lambda * params.lambda);

    let origin_stability = if params.r < 0.0 { Stability::Stable } else { Stability::Unstable };
    let mut states = vec![Equilibrium { x: 0.0, stability: origin_stability }];

    let regime;
    if delta.abs() <= FOLD_TOL {
        states.push(Equilibrium { x: base, stability: Stability::SemiStable });
        regime = Regime::Degenerate;
    } else if delta > 0.0 {
        let s = delta.sqrt();
        let x_plus = base * (1.0 + s) * (1.0 + s);
        if params.r < 0.0 {
            let x_minus = base * (1.0 - s) * (1.0 - s);
            states.push(Equilibrium { x: x_minus, stability: Stability::Unstable });
            states.push(Equilibrium { x: x_plus, stability: Stability::Stable });
            regime = Regime::Bistable;
        } else {
            // r = 0: the lower root collapses onto the origin.
            states.push(Equilibrium { x: x_plus, stability: Stability::Stable });
            regime = Regime::Monostable;
        }
    } else {
        regime = Regime::Monostable;
    }

    Ok(EquilibriumSet { discriminant: delta, states, regime })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CuspRow {
    pub r: f64,
    pub lambda: f64,
    pub n_equilibria: usize,
    /// Delta changes sign across a neighboring grid cell.
    pub fold_boundary: bool,
}

/// Equilibrium-count table over the (r, lambda) control plane, with the
/// fold locus Delta = 0 flagged wherever the discriminant changes sign
/// between neighboring grid points.
pub fn cusp_surface(
    params: &ModelParams,
    r_range: (f64, f64),
    lambda_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<Vec<CuspRow>> {
    let (nr, nl) = resolution;
    if nr < 2 || nl < 2 {
        return Err(Error::Domain(format!("cusp_surface: resolution must be >= 2 per axis, got {nr}x{nl}")));
    }
    if !(r_range.0 <= r_range.1) || !(lambda_range.0 < lambda_range.1) {
        return Err(Error::Domain("cusp_surface: empty or reversed range".into()));
    }
    if r_range.1 > 0.0 {
        return Err(Error::Domain("cusp_surface: r must stay <= 0".into()));
    }
    if lambda_range.0 <= 0.0 {
        return Err(Error::Domain("cusp_surface: lambda must stay > 0".into()));
    }

    let rs: Vec<f64> = (0..nr)
        .map(|i| r_range.0 + (r_range.1 - r_range.0) * i as f64 / (nr - 1) as f64)
        .collect();
    let ls: Vec<f64> = (0..nl)
        .map(|j| lambda_range.0 + (lambda_range.1 - lambda_range.0) * j as f64 / (nl - 1) as f64)
        .collect();

    let at = |r: f64, l: f64| ModelParams { r, lambda: l, ..*params };
    let delta = |r: f64, l: f64| at(r, l).discriminant();

    let mut rows = Vec::with_capacity(nr * nl);
    for (i, &r) in rs.iter().enumerate() {
        for (j, &l) in ls.iter().enumerate() {
            let set = equilibria(&at(r, l))?;
            let d = delta(r, l);
            let mut fold = false;
            let mut check = |dn: f64| {
                if d.signum() != dn.signum() && d != 0.0 && dn != 0.0 {
                    fold = true;
                }
            };
            if i > 0 { check(delta(rs[i - 1], l)); }
            if i + 1 < nr { check(delta(rs[i + 1], l)); }
            if j > 0 { check(delta(r, ls[j - 1])); }
            if j + 1 < nl { check(delta(r, ls[j + 1])); }
            rows.push(CuspRow { r, lambda: l, n_equilibria: set.states.len(), fold_boundary: fold });
        }
    }
    Ok(rows)
}

/// Parabolic ice-thickness profile h(x) on [0, X].
#[derive(Debug, Clone, Serialize)]
pub struct ThicknessProfile {
    /// Ice-sheet length (km).
    pub length: f64,
    /// (x, h) samples in km.
    pub samples: Vec<(f64, f64)>,
    /// Maximum height sqrt(sigma X / 2) (km), attained at x = X/2.
    pub max_height: f64,
}

/// Sample `h(x) = sqrt(sigma) (X/2 - |x - X/2|)^(1/2)` at `n_samples`
/// uniform points on [0, X].
pub fn thickness_profile(x_len: f64, params: &ModelParams, n_samples: usize) -> Result<ThicknessProfile> {
    if x_len < 0.0 {
        return Err(Error::Domain(format!("thickness_profile: X must be >= 0, got {x_len}")));
    }
    if n_samples < 3 {
        return Err(Error::Domain(format!("thickness_profile: n_samples must be >= 3, got {n_samples}")));
    }
    let ss = params.sigma.sqrt();
    let samples: Vec<(f64, f64)> = (0..n_samples)
        .map(|i| {
            let x = x_len * i as f64 / (n_samples - 1) as f64;
            let arg = (x_len / 2.0 - (x - x_len / 2.0).abs()).max(0.0);
            (x, ss * arg.sqrt())
        })
        .collect();
    Ok(ThicknessProfile {
        length: x_len,
        samples,
        max_height: (params.sigma * x_len / 2.0).sqrt(),
    })
}

/// Lamperti transform Z = 2 sqrt(X).
pub fn lamperti_forward(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("lamperti_forward: X must be >= 0, got {x}")));
    }
    Ok(2.0 * x.sqrt())
}

/// Inverse transform X = (Z/2)^2.
pub fn lamperti_inverse(z: f64) -> Result<f64> {
    if z < 0.0 {
        return Err(Error::Domain(format!("lamperti_inverse: Z must be >= 0, got {z}")));
    }
    Ok(z * z / 4.0)
}

/// Drift of the additive-noise system obtained from the Lamperti transform:
///
/// `F(Z) = -(beta lambda / sqrt(2 sigma)) (3/16 Z^2 - r) + beta Z / 6
///         - (beta^2 epsilon0^2 / (4 sigma)) / Z`
///
/// stored as `a2 Z^2 + a1 Z + a0 + am1 / Z` together with `eps^2`, so the
/// first three derivatives are closed-form.
#[derive(Debug, Clone, Copy)]
pub struct AdditiveDrift {
    a2: f64,
    a1: f64,
    a0: f64,
    am1: f64,
    eps_sq: f64,
}

impl AdditiveDrift {
    pub fn new(params: &ModelParams) -> Self {
        let c = params.beta * params.lambda / params.sqrt_2sigma();
        let be = params.beta * params.epsilon0;
        AdditiveDrift {
            a2: -(3.0 / 16.0) * c,
            a1: params.beta / 6.0,
            a0: c * params.r,
            am1: -be * be / (4.0 * params.sigma),
            eps_sq: params.eps_sq(),
        }
    }

    #[inline]
    pub fn eps_sq(&self) -> f64 {
        self.eps_sq
    }

    /// F(Z), unchecked; singular at Z = 0.
    #[inline]
    pub fn f(&self, z: f64) -> f64 {
        (self.a2 * z + self.a1) * z + self.a0 + self.am1 / z
    }

    /// F'(Z).
    #[inline]
    pub fn d1(&self, z: f64) -> f64 {
        2.0 * self.a2 * z + self.a1 - self.am1 / (z * z)
    }

    /// F''(Z).
    #[inline]
    pub fn d2(&self, z: f64) -> f64 {
        2.0 * self.a2 + 2.0 * self.am1 / (z * z * z)
    }

    /// F'''(Z).
    #[inline]
    pub fn d3(&self, z: f64) -> f64 {
        -6.0 * self.am1 / (z * z * z * z)
    }

    fn check(z: f64) -> Result<()> {
        if z <= 0.0 {
            return Err(Error::Domain(format!("additive drift: Z must be > 0 (Z^-1 term), got {z}")));
        }
        Ok(())
    }

    /// Checked F(Z).
    pub fn value(&self, z: f64) -> Result<f64> {
        Self::check(z)?;
        Ok(self.f(z))
    }

    /// Checked (F, F', F'').
    pub fn with_derivatives(&self, z: f64) -> Result<(f64, f64, f64)> {
        Self::check(z)?;
        Ok((self.f(z), self.d1(z), self.d2(z)))
    }
}

/// Convenience wrapper for the checked additive drift value.
pub fn additive_drift_f(z: f64, params: &ModelParams) -> Result<f64> {
    AdditiveDrift::new(params).value(z)
}
