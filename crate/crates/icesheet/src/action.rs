//! Onsager-Machlup action evaluation and most probable transition paths
//! via the Euler-Lagrange two-point BVP in the transformed variable
//! `Z = 2 sqrt(X)`.
//!
//! The OM Lagrangian is `(zdot - F(z))^2 + eps^2 F'(z)`; its stationary
//! paths satisfy `zddot = F'(z) F(z) + (eps^2/2) F''(z)`, solved here both
//! by damped-Newton collocation on the centered-difference discretization
//! and by RK4 shooting on the equivalent first-order system
//! `zdot = Phi + F(z)`, `Phidot = -F'(z) Phi + (eps^2/2) F''(z)` with
//! conserved `H = Phi^2/2 + F Phi - (eps^2/2) F'`.

use crate::error::{Error, Result};
use crate::linalg::thomas_solve;
use crate::model::{lamperti_forward, AdditiveDrift, ModelParams};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

/// Default regularized endpoint for "X = 0": z = 2 sqrt(0.0005 km), i.e.
/// an ice sheet 500 m long. The additive drift has a Z^-1 term, so exact
/// zero is singular.
pub fn default_z_floor() -> f64 {
    2.0 * 0.0005_f64.sqrt()
}

/// Two-point boundary data for a transition in z-space.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransitionSpec {
    pub z0: f64,
    pub z1: f64,
    pub t0: f64,
    pub t1: f64,
    pub params: ModelParams,
    pub z_floor: f64,
}

impl TransitionSpec {
    pub fn new(z0: f64, z1: f64, t0: f64, t1: f64, params: ModelParams) -> Result<Self> {
        Self::with_floor(z0, z1, t0, t1, params, default_z_floor())
    }

    pub fn with_floor(z0: f64, z1: f64, t0: f64, t1: f64, params: ModelParams, z_floor: f64) -> Result<Self> {
        params.validate()?;
        if !(t1 > t0) {
            return Err(Error::Domain(format!("TransitionSpec: need t1 > t0, got {t0}..{t1}")));
        }
        if !(z_floor > 0.0) {
            return Err(Error::Domain(format!("TransitionSpec: z_floor must be > 0, got {z_floor}")));
        }
        if z0 < z_floor || z1 < z_floor {
            return Err(Error::Domain(format!(
                "TransitionSpec: endpoints must be >= z_floor {z_floor}, got {z0}, {z1}"
            )));
        }
        Ok(TransitionSpec { z0, z1, t0, t1, params, z_floor })
    }

    fn horizon(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// Which solver produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Collocation,
    Shooting,
}

/// A discretized stationary path with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionPath {
    /// Uniform mesh on [t0, t1] (kyr).
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    /// X-image `(z/2)^2` (km).
    pub x: Vec<f64>,
    /// Momentum `Phi = zdot - F(z)` per node.
    pub phi: Vec<f64>,
    /// Hamiltonian per node.
    pub hamiltonian: Vec<f64>,
    pub om_action: f64,
    pub fw_action: f64,
    /// Dimensionless: collocation uses `max|R| dt^2 / max|z|`, shooting the
    /// relative endpoint miss before pinning.
    pub residual_norm: f64,
    pub solver_used: SolverKind,
    pub iterations: usize,
    pub continuation_steps: usize,
}

impl TransitionPath {
    /// Largest |H(t) - H(t0)| divided by the largest magnitude among the
    /// Hamiltonian's three terms along the path. The terms cancel to near
    /// zero on transition orbits, so raw |H| is not a usable scale.
    pub fn hamiltonian_drift(&self, params: &ModelParams) -> f64 {
        let drift = AdditiveDrift::new(params);
        let eps_sq = drift.eps_sq();
        let mut scale = 0.0_f64;
        for (&z, &phi) in self.z.iter().zip(&self.phi) {
            let s = 0.5 * phi * phi + (drift.f(z) * phi).abs() + (0.5 * eps_sq * drift.d1(z)).abs();
            scale = scale.max(s);
        }
        let h0 = self.hamiltonian[0];
        let dmax = self
            .hamiltonian
            .iter()
            .map(|&h| (h - h0).abs())
            .fold(0.0_f64, f64::max);
        dmax / scale.max(f64::MIN_POSITIVE)
    }
}

fn check_mesh(times: &[f64], zs: &[f64]) -> Result<()> {
    if times.len() != zs.len() {
        return Err(Error::Domain("mesh and path lengths differ".into()));
    }
    if times.len() < 3 {
        return Err(Error::Domain(format!("mesh needs >= 3 nodes, got {}", times.len())));
    }
    if !times.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Domain("mesh times must be strictly increasing".into()));
    }
    if let Some(&z) = zs.iter().find(|&&z| z <= 0.0) {
        return Err(Error::Domain(format!("path must stay positive, found z = {z}")));
    }
    Ok(())
}

/// Centered first differences, one-sided at the endpoints.
fn mesh_derivatives(times: &[f64], zs: &[f64]) -> Vec<f64> {
    let n = zs.len();
    let mut d = vec![0.0; n];
    d[0] = (zs[1] - zs[0]) / (times[1] - times[0]);
    d[n - 1] = (zs[n - 1] - zs[n - 2]) / (times[n - 1] - times[n - 2]);
    for j in 1..n - 1 {
        d[j] = (zs[j + 1] - zs[j - 1]) / (times[j + 1] - times[j - 1]);
    }
    d
}

fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    w[0] = 0.5 * (times[1] - times[0]);
    w[n - 1] = 0.5 * (times[n - 1] - times[n - 2]);
    for j in 1..n - 1 {
        w[j] = 0.5 * (times[j + 1] - times[j - 1]);
    }
    w
}

/// Pointwise OM Lagrangian `(zdot - F(z))^2 + eps^2 F'(z)`.
pub fn om_lagrangian(z: f64, zdot: f64, params: &ModelParams) -> Result<f64> {
    let drift = AdditiveDrift::new(params);
    drift.value(z)?;
    let dev = zdot - drift.f(z);
    Ok(dev * dev + drift.eps_sq() * drift.d1(z))
}

/// OM action: trapezoidal quadrature of the OM Lagrangian with centered
/// differences for zdot (one-sided at the endpoints).
pub fn om_action(times: &[f64], zs: &[f64], params: &ModelParams) -> Result<f64> {
    check_mesh(times, zs)?;
    let drift = AdditiveDrift::new(params);
    let eps_sq = drift.eps_sq();
    let zd = mesh_derivatives(times, zs);
    let w = trapezoid_weights(times);
    let mut total = 0.0;
    for j in 0..zs.len() {
        let dev = zd[j] - drift.f(zs[j]);
        total += w[j] * (dev * dev + eps_sq * drift.d1(zs[j]));
    }
    Ok(total)
}

/// Freidlin-Wentzell action: trapezoidal integral of `(zdot - F(z))^2`,
/// same differences and weights as `om_action` so the identity
/// `om - fw = eps^2 Int F' dt` holds to rounding on any mesh.
pub fn fw_action(times: &[f64], zs: &[f64], params: &ModelParams) -> Result<f64> {
    check_mesh(times, zs)?;
    let drift = AdditiveDrift::new(params);
    let zd = mesh_derivatives(times, zs);
    let w = trapezoid_weights(times);
    let mut total = 0.0;
    for j in 0..zs.len() {
        let dev = zd[j] - drift.f(zs[j]);
        total += w[j] * dev * dev;
    }
    Ok(total)
}

/// Analytic gradient of the discretized OM action with respect to the
/// interior nodes (entries 0 at the endpoints, which are Dirichlet data).
pub fn om_action_gradient(times: &[f64], zs: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    check_mesh(times, zs)?;
    let n = zs.len();
    let drift = AdditiveDrift::new(params);
    let eps_sq = drift.eps_sq();
    let zd = mesh_derivatives(times, zs);
    let w = trapezoid_weights(times);
    let dev: Vec<f64> = (0..n).map(|j| zd[j] - drift.f(zs[j])).collect();

    let mut grad = vec![0.0; n];
    for k in 1..n - 1 {
        // direct dependence of the node's own Lagrangian on z_k
        let mut g = w[k] * (-2.0 * dev[k] * drift.d1(zs[k]) + eps_sq * drift.d2(zs[k]));
        // z_k enters the centered derivative at k-1 ...
        let dk_m = if k - 1 == 0 {
            1.0 / (times[1] - times[0]) // one-sided at the left endpoint
        } else {
            1.0 / (times[k] - times[k - 2])
        };
        g += w[k - 1] * 2.0 * dev[k - 1] * dk_m;
        // ... and at k+1 (with a negative weight)
        let dk_p = if k + 1 == n - 1 {
            -1.0 / (times[n - 1] - times[n - 2]) // one-sided at the right endpoint
        } else {
            -1.0 / (times[k + 2] - times[k])
        };
        g += w[k + 1] * 2.0 * dev[k + 1] * dk_p;
        grad[k] = g;
    }
    Ok(grad)
}

/// Right-hand side of the Euler-Lagrange equation,
/// `zddot = F'(z) F(z) + (eps^2/2) F''(z)`.
pub fn euler_lagrange_rhs(z: f64, params: &ModelParams) -> Result<f64> {
    let drift = AdditiveDrift::new(params);
    drift.value(z)?;
    Ok(drift.d1(z) * drift.f(z) + 0.5 * drift.eps_sq() * drift.d2(z))
}

/// Collocation solver settings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CollocationOptions {
    pub n_nodes: usize,
    /// Convergence target for the scaled residual `max|R| dt^2 / max|z|`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Step-halving budget per Newton iteration.
    pub max_damping: usize,
    /// On divergence, restart from epsilon0 = 0.2 and track the branch
    /// down to the requested noise level.
    pub continuation: bool,
}

impl Default for CollocationOptions {
    fn default() -> Self {
        CollocationOptions {
            n_nodes: 800,
            tol: 1e-12,
            max_iterations: 200,
            max_damping: 30,
            continuation: true,
        }
    }
}

/// Shooting solver settings. The output mesh has `n_nodes` nodes; the RK4
/// integrator takes `substeps` steps per mesh interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShootingOptions {
    pub n_nodes: usize,
    pub substeps: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions { n_nodes: 800, substeps: 50 }
    }
}

fn uniform_mesh(spec: &TransitionSpec, n_nodes: usize) -> Vec<f64> {
    let dt = spec.horizon() / (n_nodes - 1) as f64;
    (0..n_nodes).map(|j| spec.t0 + j as f64 * dt).collect()
}

/// Assemble a `TransitionPath` from a solved mesh, computing momenta,
/// Hamiltonian trace and both actions. `phi` may come from the integrator
/// (shooting); otherwise centered differences are used.
#[allow(clippy::too_many_arguments)]
fn finish_path(
    spec: &TransitionSpec,
    times: Vec<f64>,
    mut zs: Vec<f64>,
    phi_opt: Option<Vec<f64>>,
    residual_norm: f64,
    solver_used: SolverKind,
    iterations: usize,
    continuation_steps: usize,
) -> Result<TransitionPath> {
    let n = zs.len();
    // Dirichlet endpoints are exact by contract.
    zs[0] = spec.z0;
    zs[n - 1] = spec.z1;
    let drift = AdditiveDrift::new(&spec.params);
    let eps_sq = drift.eps_sq();
    let om = om_action(&times, &zs, &spec.params)?;
    let fw = fw_action(&times, &zs, &spec.params)?;
    let phi = phi_opt.unwrap_or_else(|| {
        let zd = mesh_derivatives(&times, &zs);
        (0..n).map(|j| zd[j] - drift.f(zs[j])).collect()
    });
    let hamiltonian: Vec<f64> = (0..n)
        .map(|j| {
            let z = zs[j];
            let p = phi[j];
            0.5 * p * p + drift.f(z) * p - 0.5 * eps_sq * drift.d1(z)
        })
        .collect();
    let x = zs.iter().map(|&z| z * z / 4.0).collect();
    Ok(TransitionPath {
        times,
        z: zs,
        x,
        phi,
        hamiltonian,
        om_action: om,
        fw_action: fw,
        residual_norm,
        solver_used,
        iterations,
        continuation_steps,
    })
}

struct NewtonOutcome {
    z: Vec<f64>,
    residual: f64,
    iterations: usize,
}

/// Damped Newton on the centered-difference discretization of the EL
/// equation with Dirichlet endpoints.
fn newton_collocation(
    spec: &TransitionSpec,
    params: &ModelParams,
    init: &[f64],
    opts: &CollocationOptions,
) -> std::result::Result<NewtonOutcome, NewtonOutcome> {
    let n = opts.n_nodes;
    let dt = spec.horizon() / (n - 1) as f64;
    let dt2 = dt * dt;
    let drift = AdditiveDrift::new(params);
    let eps_sq = drift.eps_sq();
    let z_guard = 1e-3 * spec.z_floor.min(spec.z1.min(spec.z0));

    let mut z = init.to_vec();
    z[0] = spec.z0;
    z[n - 1] = spec.z1;

    let residual = |z: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for j in 1..n - 1 {
            let rhs = drift.d1(z[j]) * drift.f(z[j]) + 0.5 * eps_sq * drift.d2(z[j]);
            out.push((z[j + 1] - 2.0 * z[j] + z[j - 1]) / dt2 - rhs);
        }
    };
    let norm2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scaled = |r: &[f64], z: &[f64]| {
        let rmax = r.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        let zmax = z.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        rmax * dt2 / zmax.max(1e-300)
    };

    let mut r = Vec::with_capacity(n - 2);
    let mut r_try = Vec::with_capacity(n - 2);
    let mut scratch = Vec::new();
    residual(&z, &mut r);

    for it in 0..opts.max_iterations {
        let s = scaled(&r, &z);
        if s <= opts.tol {
            return Ok(NewtonOutcome { z, residual: s, iterations: it });
        }
        // Tridiagonal Jacobian: off-diagonals 1/dt^2, diagonal
        // -2/dt^2 - d/dz [F'F + (eps^2/2) F''].
        let m = n - 2;
        let lower = vec![1.0 / dt2; m];
        let upper = vec![1.0 / dt2; m];
        let mut diag = Vec::with_capacity(m);
        for &zj in &z[1..n - 1] {
            let dd = drift.d2(zj) * drift.f(zj)
                + drift.d1(zj) * drift.d1(zj)
                + 0.5 * eps_sq * drift.d3(zj);
            diag.push(-2.0 / dt2 - dd);
        }
        let mut step: Vec<f64> = r.iter().map(|&v| -v).collect();
        thomas_solve(&lower, &diag, &upper, &mut step, &mut scratch);

        // Damping: halve until the residual norm decreases and the iterate
        // stays positive.
        let r0 = norm2(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_damping {
            let mut z_try = z.clone();
            for j in 1..n - 1 {
                z_try[j] += lambda * step[j - 1];
            }
            if z_try[1..n - 1].iter().any(|&v| v <= z_guard) {
                lambda *= 0.5;
                continue;
            }
            residual(&z_try, &mut r_try);
            if norm2(&r_try) < r0 {
                z = z_try;
                std::mem::swap(&mut r, &mut r_try);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            let s = scaled(&r, &z);
            return Err(NewtonOutcome { z, residual: s, iterations: it });
        }
    }
    let s = scaled(&r, &z);
    if s <= opts.tol {
        Ok(NewtonOutcome { z, residual: s, iterations: opts.max_iterations })
    } else {
        Err(NewtonOutcome { z, residual: s, iterations: opts.max_iterations })
    }
}

/// Solve the EL BVP by damped-Newton collocation. The initial guess is the
/// straight line between the endpoints; on divergence (and when enabled)
/// the solver restarts at epsilon0 = 0.2 and continues down in noise,
/// reusing each converged branch as the next initial guess.
pub fn solve_bvp_collocation(spec: &TransitionSpec, opts: &CollocationOptions) -> Result<TransitionPath> {
    if opts.n_nodes < 50 {
        return Err(Error::Domain(format!("collocation: n_nodes must be >= 50, got {}", opts.n_nodes)));
    }
    let n = opts.n_nodes;
    let times = uniform_mesh(spec, n);
    let linear: Vec<f64> = (0..n)
        .map(|j| spec.z0 + (spec.z1 - spec.z0) * j as f64 / (n - 1) as f64)
        .collect();

    match newton_collocation(spec, &spec.params, &linear, opts) {
        Ok(out) => finish_path(spec, times, out.z, None, out.residual, SolverKind::Collocation, out.iterations, 0),
        Err(first_failure) => {
            if !opts.continuation {
                return Err(Error::NonConvergence {
                    context: "collocation".into(),
                    residual: first_failure.residual,
                    iterations: first_failure.iterations,
                    last_iterate: first_failure.z,
                });
            }
            // Continuation in epsilon0 from 0.2 down to the target.
            let target = spec.params.epsilon0;
            let start = 0.2_f64.max(target * 2.0);
            let n_steps = 8;
            let mut guess = linear;
            let mut total_iters = 0;
            let mut cont_steps = 0;
            for k in 0..=n_steps {
                // geometric ramp from start to target (target may be 0; then
                // ramp linearly over the last step)
                let eps0 = if target > 0.0 {
                    start * (target / start).powf(k as f64 / n_steps as f64)
                } else if k < n_steps {
                    start * (1.0 - k as f64 / n_steps as f64)
                } else {
                    0.0
                };
                let p = spec.params.with_epsilon0(eps0);
                match newton_collocation(spec, &p, &guess, opts) {
                    Ok(out) => {
                        guess = out.z;
                        total_iters += out.iterations;
                        cont_steps += 1;
                        if k == n_steps {
                            return finish_path(
                                spec,
                                times,
                                guess,
                                None,
                                out.residual,
                                SolverKind::Collocation,
                                total_iters,
                                cont_steps,
                            );
                        }
                    }
                    Err(out) => {
                        return Err(Error::NonConvergence {
                            context: format!("collocation continuation at epsilon0 = {eps0}"),
                            residual: out.residual,
                            iterations: out.iterations,
                            last_iterate: out.z,
                        });
                    }
                }
            }
            unreachable!("continuation loop returns on its last step");
        }
    }
}

/// One RK4 step of the Hamiltonian system.
#[inline]
fn rk4_step(drift: &AdditiveDrift, eps_sq: f64, z: f64, phi: f64, dt: f64) -> (f64, f64) {
    let rhs = |z: f64, phi: f64| -> (f64, f64) {
        (phi + drift.f(z), -drift.d1(z) * phi + 0.5 * eps_sq * drift.d2(z))
    };
    let (k1z, k1p) = rhs(z, phi);
    let (k2z, k2p) = rhs(z + 0.5 * dt * k1z, phi + 0.5 * dt * k1p);
    let (k3z, k3p) = rhs(z + 0.5 * dt * k2z, phi + 0.5 * dt * k2p);
    let (k4z, k4p) = rhs(z + dt * k3z, phi + dt * k3p);
    (
        z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
        phi + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

/// Outcome of one shot: either the state crossed the target level early
/// (at the returned time) or ran to the horizon with the recorded samples.
enum Shot {
    Crossed(f64),
    Ran { z_nodes: Vec<f64>, phi_nodes: Vec<f64>, z_final: f64 },
}

fn shoot_once(spec: &TransitionSpec, phi0: f64, opts: &ShootingOptions) -> Shot {
    let drift = AdditiveDrift::new(&spec.params);
    let eps_sq = drift.eps_sq();
    let n_nodes = opts.n_nodes;
    let total_steps = (n_nodes - 1) * opts.substeps;
    let dt = spec.horizon() / total_steps as f64;
    let descending = spec.z1 < spec.z0;
    let z_stop = 1e-4 * spec.z_floor;

    let mut z = spec.z0;
    let mut phi = phi0;
    let mut z_nodes = Vec::with_capacity(n_nodes);
    let mut phi_nodes = Vec::with_capacity(n_nodes);
    z_nodes.push(z);
    phi_nodes.push(phi);
    for step in 1..=total_steps {
        let (zn, pn) = rk4_step(&drift, eps_sq, z, phi, dt);
        z = zn;
        phi = pn;
        let crossed = if descending { z <= spec.z1 } else { z >= spec.z1 };
        if crossed && step < total_steps {
            return Shot::Crossed(step as f64 * dt);
        }
        if z <= z_stop || !z.is_finite() || !phi.is_finite() {
            return Shot::Crossed(step as f64 * dt);
        }
        if step % opts.substeps == 0 {
            z_nodes.push(z);
            phi_nodes.push(phi);
        }
    }
    Shot::Ran { z_nodes, phi_nodes, z_final: z }
}

/// Solve the BVP by shooting on the initial momentum: integrate the
/// Hamiltonian system with RK4 and bisect `Phi(t0)` on an event-based miss
/// function (sign from early target crossings vs. endpoint offset).
pub fn solve_bvp_shooting(spec: &TransitionSpec, opts: &ShootingOptions) -> Result<TransitionPath> {
    if opts.n_nodes < 50 || opts.substeps == 0 {
        return Err(Error::Domain("shooting: need n_nodes >= 50 and substeps >= 1".into()));
    }
    let direction: f64 = if spec.z1 < spec.z0 { -1.0 } else { 1.0 };
    let horizon = spec.horizon();

    // miss < 0: crossed the target before t1; miss > 0: ended short of it.
    let miss = |phi0: f64| -> f64 {
        match shoot_once(spec, phi0, opts) {
            Shot::Crossed(tc) => direction * (horizon - tc),
            Shot::Ran { z_final, .. } => z_final - spec.z1,
        }
    };

    let finish = |phi0: f64, iterations: usize| -> Result<TransitionPath> {
        match shoot_once(spec, phi0, opts) {
            Shot::Ran { z_nodes, phi_nodes, z_final } => {
                let zmax = z_nodes.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
                let residual = (z_final - spec.z1).abs() / zmax.max(1e-300);
                let times = uniform_mesh(spec, opts.n_nodes);
                finish_path(spec, times, z_nodes, Some(phi_nodes), residual, SolverKind::Shooting, iterations, 0)
            }
            Shot::Crossed(_) => Err(Error::NonConvergence {
                context: "shooting: converged momentum still crosses early".into(),
                residual: f64::NAN,
                iterations,
                last_iterate: vec![],
            }),
        }
    };

    let m0 = miss(0.0);
    if m0 == 0.0 {
        return finish(0.0, 0);
    }

    // Bracket: walk phi0 away from zero toward the target until the miss
    // changes sign.
    let toward = if m0 > 0.0 { direction } else { -direction };
    let mut lo_phi = 0.0;
    let mut lo_m = m0;
    let mut mag = 1e-10;
    let mut bracket = None;
    let mut evals = 1;
    while mag <= 1e4 {
        let cand = toward * mag;
        let m = miss(cand);
        evals += 1;
        if m == 0.0 {
            return finish(cand, evals);
        }
        if m.signum() != lo_m.signum() {
            bracket = Some((lo_phi, cand));
            break;
        }
        lo_phi = cand;
        lo_m = m;
        mag *= 4.0;
    }
    let (mut a, mut b) = bracket.ok_or_else(|| Error::NonConvergence {
        context: "shooting: no bracketing momentum found".into(),
        residual: lo_m,
        iterations: evals,
        last_iterate: vec![],
    })?;
    let mut ma = miss(a);

    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let mm = miss(mid);
        evals += 1;
        if mm == 0.0 {
            return finish(mid, evals);
        }
        if mm.signum() == ma.signum() {
            a = mid;
            ma = mm;
        } else {
            b = mid;
        }
    }
    // Return the side that runs the full horizon (positive miss).
    let phi_star = if ma > 0.0 { a } else { b };
    finish(phi_star, evals)
}

/// Most probable transition path between X endpoints: maps through the
/// Lamperti transform (0 mapped to the floor), solves the BVP, and carries
/// the X-image back.
pub fn most_probable_path_x(
    x0: f64,
    x1: f64,
    t1: f64,
    params: &ModelParams,
    opts: &CollocationOptions,
) -> Result<TransitionPath> {
    if x0 < 0.0 || x1 < 0.0 {
        return Err(Error::Domain(format!("most_probable_path_x: X endpoints must be >= 0, got {x0}, {x1}")));
    }
    let floor = default_z_floor();
    let z0 = lamperti_forward(x0)?.max(floor);
    let z1 = lamperti_forward(x1)?.max(floor);
    let spec = TransitionSpec::with_floor(z0, z1, 0.0, t1, *params, floor)?;
    solve_bvp_collocation(&spec, opts)
}

/// Result of the random-perturbation minimality probe.
#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub base_action: f64,
    pub n_perturbations: usize,
    pub amplitude: f64,
    /// Fraction of perturbations whose action is >= the path's.
    pub fraction_not_lower: f64,
    /// Most negative action change observed (0 if none).
    pub worst_decrease: f64,
}

/// Perturb the path with random smooth interior bumps (endpoints pinned)
/// and report the fraction that do not lower the OM action.
pub fn local_minimality_check(
    times: &[f64],
    zs: &[f64],
    params: &ModelParams,
    n_perturbations: usize,
    amplitude: f64,
    seed: u64,
) -> Result<MinimalityReport> {
    check_mesh(times, zs)?;
    let base = om_action(times, zs, params)?;
    let n = zs.len();
    let t0 = times[0];
    let span = times[n - 1] - t0;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let modes = 5;

    let mut not_lower = 0usize;
    let mut worst = 0.0_f64;
    for _ in 0..n_perturbations {
        let coeffs: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut bump: Vec<f64> = times
            .iter()
            .map(|&t| {
                let s = (t - t0) / span;
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, c)| c * ((m + 1) as f64 * std::f64::consts::PI * s).sin())
                    .sum::<f64>()
            })
            .collect();
        let sup = bump.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        if sup > 0.0 {
            let scale = amplitude / sup;
            for v in &mut bump {
                *v *= scale;
            }
        }
        let perturbed: Vec<f64> = zs.iter().zip(&bump).map(|(&z, &b)| z + b).collect();
        if perturbed.iter().any(|&z| z <= 0.0) {
            // count as not-lower: the perturbation left the domain
            not_lower += 1;
            continue;
        }
        let action = om_action(times, &perturbed, params)?;
        let delta = action - base;
        if delta >= 0.0 {
            not_lower += 1;
        } else {
            worst = worst.min(delta);
        }
    }
    Ok(MinimalityReport {
        base_action: base,
        n_perturbations,
        amplitude,
        fraction_not_lower: if n_perturbations == 0 { 1.0 } else { not_lower as f64 / n_perturbations as f64 },
        worst_decrease: worst,
    })
}

/// Max relative disagreement between the analytic gradient of the
/// discretized OM action and central finite differences of the same
/// functional.
pub fn gradient_fd_max_rel_err(times: &[f64], zs: &[f64], params: &ModelParams, h: f64) -> Result<f64> {
    let grad = om_action_gradient(times, zs, params)?;
    let gmax = grad.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let mut worst = 0.0_f64;
    let mut z_work = zs.to_vec();
    for k in 1..zs.len() - 1 {
        z_work[k] = zs[k] + h;
        let plus = om_action(times, &z_work, params)?;
        z_work[k] = zs[k] - h;
        let minus = om_action(times, &z_work, params)?;
        z_work[k] = zs[k];
        let fd = (plus - minus) / (2.0 * h);
        worst = worst.max((fd - grad[k]).abs() / gmax.max(1e-300));
    }
    Ok(worst)
}
