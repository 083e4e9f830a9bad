//! Finite-volume solver for the Fokker-Planck equation
//! `p_t = -(f p)_x + (eps^2/2) (x p)_xx` on a truncated domain, with
//! maximal-likely-trajectory extraction.
//!
//! The flux is written `J = a p - D p_x` with `D = (eps^2/2) g^2` and
//! `a = f - D'`, discretized with Chang-Cooper weighted interfaces so the
//! discrete stationary profile matches the local exponential exactly.
//! Zero-flux boundaries conserve mass to rounding; backward Euler keeps
//! the density nonnegative through the M-matrix structure.

use crate::error::{Error, Result};
use crate::linalg::thomas_solve;
use crate::model::ModelParams;
use rayon::prelude::*;
use serde::Serialize;

/// Uniform cell-centered grid on [0, x_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_max > 0.0) {
            return Err(Error::Domain(format!("Grid1D: x_max must be > 0, got {x_max}")));
        }
        if n_cells < 100 {
            return Err(Error::Domain(format!("Grid1D: n_cells must be >= 100, got {n_cells}")));
        }
        Ok(Grid1D { x_max, n_cells })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.x_max / self.n_cells as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    /// Cell containing x, clamped to the grid.
    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        ((x / self.h()) as usize).min(self.n_cells - 1)
    }
}

/// Chang-Cooper interface weight for Peclet number w = a h / D.
///
/// delta = 1/(1 - e^{-w}) - 1/w, which makes the numerical flux vanish on
/// the exact local exponential p_{i+1}/p_i = e^w. Limits: 1/2 for w -> 0
/// (central), 1 - 1/w for large positive w, -1/w for large negative w.
fn chang_cooper_delta(w: f64) -> f64 {
    if w.abs() < 1e-2 {
        // series: the closed form cancels catastrophically near w = 0
        0.5 + w / 12.0 - w * w * w / 720.0
    } else if w > 500.0 {
        1.0 - 1.0 / w
    } else if w < -500.0 {
        -1.0 / w
    } else {
        1.0 / (-f64::exp_m1(-w)) - 1.0 / w
    }
}

/// Discrete conservative operator `dp/dt = A p` with zero-flux boundaries.
///
/// The flux through interior interface k (at x = k h) is
/// `J_k = G_k p_{k-1} + H_k p_k`; boundary fluxes are identically zero, so
/// the columns of A sum to zero exactly in floating point.
#[derive(Debug, Clone)]
pub struct FpeOperator {
    pub grid: Grid1D,
    /// Coefficient of the left cell in each interior interface flux.
    g: Vec<f64>,
    /// Coefficient of the right cell in each interior interface flux.
    h: Vec<f64>,
}

impl FpeOperator {
    /// Build from advection `a(x) = f(x) - D'(x)` and diffusion `D(x)`
    /// evaluated at the interior interfaces. D must be positive there.
    pub fn from_coefficients(
        grid: Grid1D,
        a: impl Fn(f64) -> f64,
        d: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let hw = grid.h();
        let n = grid.n_cells;
        let mut gc = Vec::with_capacity(n - 1);
        let mut hc = Vec::with_capacity(n - 1);
        for k in 1..n {
            let x = k as f64 * hw;
            let dk = d(x);
            let ak = a(x);
            if !(dk > 0.0) {
                return Err(Error::Solver(format!(
                    "FPE operator: diffusion must be > 0 at interior interfaces, D({x}) = {dk}"
                )));
            }
            let w = ak * hw / dk;
            let delta = chang_cooper_delta(w);
            gc.push(ak * delta + dk / hw);
            hc.push(ak * (1.0 - delta) - dk / hw);
        }
        Ok(FpeOperator { grid, g: gc, h: hc })
    }

    /// Operator for the model: `D = (eps^2/2) x`, `a = f - eps^2/2`.
    pub fn build(grid: Grid1D, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let p = *params;
        let half_eps_sq = 0.5 * p.eps_sq();
        if half_eps_sq == 0.0 {
            // Pure advection: Chang-Cooper degenerates to upwind. Keep a
            // vanishing diffusion floor so interface weights stay finite.
            let floor = 1e-300;
            return FpeOperator::from_coefficients(grid, move |x| p.drift(x), move |_| floor);
        }
        FpeOperator::from_coefficients(grid, move |x| p.drift(x) - half_eps_sq, move |x| half_eps_sq * x)
    }

    /// dp/dt for a given density (cell averages).
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let n = self.grid.n_cells;
        debug_assert_eq!(p.len(), n);
        let hw = self.grid.h();
        let mut flux = vec![0.0; n + 1];
        for k in 1..n {
            flux[k] = self.g[k - 1] * p[k - 1] + self.h[k - 1] * p[k];
        }
        (0..n).map(|i| -(flux[i + 1] - flux[i]) / hw).collect()
    }

    /// Tridiagonal bands of A (lower, diag, upper), row-wise.
    fn bands(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.grid.n_cells;
        let hw = self.grid.h();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            // right interface i+1 exists for i < n-1, left interface i for i > 0
            if i + 1 < n {
                diag[i] -= self.g[i] / hw;
                upper[i] = -self.h[i] / hw;
            }
            if i > 0 {
                diag[i] += self.h[i - 1] / hw;
                lower[i] = self.g[i - 1] / hw;
            }
        }
        (lower, diag, upper)
    }
}

/// Time-stepping scheme for the implicit solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Unconditionally stable and positivity-preserving.
    BackwardEuler,
    /// Second order in time; tiny negative round-off is clamped.
    Trapezoidal,
}

/// Solver settings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FpeSettings {
    pub x_max: f64,
    pub n_cells: usize,
    /// Time step (kyr).
    pub dt: f64,
    /// Steps per stored density row.
    pub output_stride: usize,
    pub scheme: Scheme,
    /// Initial Gaussian width in cells (delta approximation).
    pub init_width_cells: f64,
}

impl Default for FpeSettings {
    fn default() -> Self {
        FpeSettings {
            x_max: 3000.0,
            n_cells: 2000,
            dt: 0.05,
            output_stride: 20,
            scheme: Scheme::BackwardEuler,
            init_width_cells: 3.0,
        }
    }
}

/// Mass drift beyond this is a solver error.
pub const MASS_TOL: f64 = 1e-6;
/// Negative densities below `-NEG_TOL * max(p)` are a solver error;
/// shallower ones are clamped to zero and the mass renormalized.
const NEG_TOL: f64 = 1e-12;

/// Probability density on the space-time grid.
#[derive(Debug, Clone, Serialize)]
pub struct DensityField {
    pub grid: Grid1D,
    /// Stored instants (kyr).
    pub times: Vec<f64>,
    /// `rows[k]` is the density (1/km) per cell at `times[k]`.
    pub rows: Vec<Vec<f64>>,
}

impl DensityField {
    pub fn mass(&self, k: usize) -> f64 {
        self.rows[k].iter().sum::<f64>() * self.grid.h()
    }

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
}

/// Normalized Gaussian bump of standard deviation `width` (km) centered at
/// x0, as the delta-function initial condition.
pub fn initial_density(grid: &Grid1D, x0: f64, width: f64) -> Result<Vec<f64>> {
    if !(0.0..=grid.x_max).contains(&x0) {
        return Err(Error::Domain(format!(
            "initial_density: X0 = {x0} outside [0, {}]",
            grid.x_max
        )));
    }
    if !(width > 0.0) {
        return Err(Error::Domain(format!("initial_density: width must be > 0, got {width}")));
    }
    let n = grid.n_cells;
    let mut p: Vec<f64> = (0..n)
        .map(|i| {
            let u = (grid.center(i) - x0) / width;
            (-0.5 * u * u).exp()
        })
        .collect();
    let mass: f64 = p.iter().sum::<f64>() * grid.h();
    if mass <= 0.0 {
        return Err(Error::Solver("initial_density: bump mass underflowed".into()));
    }
    for v in &mut p {
        *v /= mass;
    }
    Ok(p)
}

/// Integrate `dp/dt = A p` from a given initial density.
pub fn solve_with_operator(
    op: &FpeOperator,
    p0: Vec<f64>,
    t_end: f64,
    dt: f64,
    output_stride: usize,
    scheme: Scheme,
) -> Result<DensityField> {
    if !(t_end > 0.0) || !(dt > 0.0) {
        return Err(Error::Domain(format!("solve: need t_end > 0 and dt > 0, got {t_end}, {dt}")));
    }
    if output_stride == 0 {
        return Err(Error::Domain("solve: output_stride must be >= 1".into()));
    }
    let grid = op.grid;
    let n = grid.n_cells;
    let hw = grid.h();
    let n_steps = (t_end / dt).round().max(1.0) as usize;

    let (al, ad, au) = op.bands();
    // M = I - theta dt A, rhs built from (I + (1-theta) dt A)
    let theta = match scheme {
        Scheme::BackwardEuler => 1.0,
        Scheme::Trapezoidal => 0.5,
    };
    let ml: Vec<f64> = al.iter().map(|&v| -theta * dt * v).collect();
    let md: Vec<f64> = ad.iter().map(|&v| 1.0 - theta * dt * v).collect();
    let mu: Vec<f64> = au.iter().map(|&v| -theta * dt * v).collect();

    let mut p = p0;
    let mass0: f64 = p.iter().sum::<f64>() * hw;
    let mut times = vec![0.0];
    let mut rows = vec![p.clone()];
    let mut scratch = Vec::new();
    let mut rhs = vec![0.0; n];

    for step in 1..=n_steps {
        if theta < 1.0 {
            let ap = op.apply(&p);
            for i in 0..n {
                rhs[i] = p[i] + (1.0 - theta) * dt * ap[i];
            }
        } else {
            rhs.copy_from_slice(&p);
        }
        thomas_solve(&ml, &md, &mu, &mut rhs, &mut scratch);
        std::mem::swap(&mut p, &mut rhs);

        let mut pmax = 0.0_f64;
        for &v in &p {
            if !v.is_finite() {
                return Err(Error::Solver(format!("non-finite density at step {step}")));
            }
            pmax = pmax.max(v);
        }
        let mut clamped = false;
        for v in &mut p {
            if *v < 0.0 {
                if *v < -NEG_TOL * pmax {
                    return Err(Error::Solver(format!(
                        "negative density {v:.3e} (max {pmax:.3e}) at step {step}"
                    )));
                }
                *v = 0.0;
                clamped = true;
            }
        }
        let mass: f64 = p.iter().sum::<f64>() * hw;
        if clamped && mass > 0.0 {
            let scale = mass0 / mass;
            for v in &mut p {
                *v *= scale;
            }
        } else if (mass - mass0).abs() > MASS_TOL * mass0.max(1e-300) {
            return Err(Error::Solver(format!(
                "mass drift {:.3e} exceeds {MASS_TOL:.1e} at step {step}",
                (mass - mass0).abs()
            )));
        }

        if step % output_stride == 0 || step == n_steps {
            times.push(step as f64 * dt);
            rows.push(p.clone());
        }
    }
    Ok(DensityField { grid, times, rows })
}

/// Solve the model FPE from a delta-like initial condition at x0.
pub fn solve(params: &ModelParams, x0: f64, t_end: f64, settings: &FpeSettings) -> Result<DensityField> {
    let grid = Grid1D::new(settings.x_max, settings.n_cells)?;
    let op = FpeOperator::build(grid, params)?;
    let p0 = initial_density(&grid, x0, settings.init_width_cells * grid.h())?;
    solve_with_operator(&op, p0, t_end, settings.dt, settings.output_stride, settings.scheme)
}

/// Maximal likely trajectory: the mode of p(X, t) per stored time.
#[derive(Debug, Clone, Serialize)]
pub struct MlTrajectory {
    pub times: Vec<f64>,
    /// Mode locations (km).
    pub x_ml: Vec<f64>,
    pub terminal_state: f64,
    /// Mode moved less than `CONVERGENCE_WINDOW_KM` over the final 10%.
    pub converged: bool,
}

/// Mode movement below this over the final 10% of the horizon counts as
/// converged.
pub const CONVERGENCE_WINDOW_KM: f64 = 0.1;

impl MlTrajectory {
    pub fn min_mode(&self) -> f64 {
        self.x_ml.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Mode of one density row.
///
/// The first cell hosts the boundary point mass of the absorbed (melted)
/// state -- an exit-boundary atom, not part of the continuous density -- so
/// the argmax runs over interior cells only. Ties break toward smaller X.
/// The argmax cell is refined by a parabola through its three cells when
/// all three are interior; the vertex is clamped to the cell.
pub fn density_mode(grid: &Grid1D, row: &[f64]) -> f64 {
    let n = grid.n_cells;
    let mut k = 1;
    for i in 2..n {
        if row[i] > row[k] {
            k = i;
        }
    }
    let h = grid.h();
    let xc = grid.center(k);
    if k < 2 || k + 1 >= n {
        return xc;
    }
    let (pm, p0, pp) = (row[k - 1], row[k], row[k + 1]);
    let denom = pm - 2.0 * p0 + pp;
    if denom >= 0.0 {
        return xc;
    }
    let v = xc + 0.5 * h * (pm - pp) / denom;
    v.clamp(xc - 0.5 * h, xc + 0.5 * h)
}

/// Extract the mode trajectory from a solved density field.
pub fn maximal_likely_trajectory(field: &DensityField) -> Result<MlTrajectory> {
    if field.rows.is_empty() {
        return Err(Error::EmptyInput("maximal_likely_trajectory: empty field".into()));
    }
    let x_ml: Vec<f64> = field.rows.iter().map(|row| density_mode(&field.grid, row)).collect();
    let t_end = *field.times.last().unwrap();
    let tail_start = t_end * 0.9;
    let tail: Vec<f64> = field
        .times
        .iter()
        .zip(&x_ml)
        .filter(|(t, _)| **t >= tail_start)
        .map(|(_, &x)| x)
        .collect();
    let converged = if tail.len() >= 2 {
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo < CONVERGENCE_WINDOW_KM
    } else {
        false
    };
    Ok(MlTrajectory {
        times: field.times.clone(),
        terminal_state: *x_ml.last().unwrap(),
        x_ml,
        converged,
    })
}

/// Converged terminal modes from a set of initial conditions, clustered
/// within 1 km. Non-converged starts are reported separately.
#[derive(Debug, Clone, Serialize)]
pub struct MlEquilibria {
    /// Cluster representatives (mean terminal mode), ascending.
    pub clusters: Vec<f64>,
    /// Initial conditions whose trajectories did not converge.
    pub non_converged: Vec<f64>,
}

const CLUSTER_WIDTH_KM: f64 = 1.0;

/// Run solve + mode extraction per initial condition (concurrently; the
/// solves are independent) and cluster the converged terminal states.
pub fn detect_ml_equilibria(
    params: &ModelParams,
    initial_set: &[f64],
    t_end: f64,
    settings: &FpeSettings,
) -> Result<MlEquilibria> {
    if initial_set.is_empty() {
        return Err(Error::EmptyInput("detect_ml_equilibria: empty initial set".into()));
    }
    let runs: Vec<Result<MlTrajectory>> = initial_set
        .par_iter()
        .map(|&x0| {
            let field = solve(params, x0, t_end, settings)?;
            maximal_likely_trajectory(&field)
        })
        .collect();
    let mut terminals = Vec::new();
    let mut non_converged = Vec::new();
    for (&x0, run) in initial_set.iter().zip(runs) {
        let mlt = run?;
        if mlt.converged {
            terminals.push(mlt.terminal_state);
        } else {
            non_converged.push(x0);
        }
    }
    terminals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut clusters = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for &t in &terminals {
        if let Some(&last) = members.last() {
            if t - last > CLUSTER_WIDTH_KM {
                clusters.push(members.iter().sum::<f64>() / members.len() as f64);
                members.clear();
            }
        }
        members.push(t);
    }
    if !members.is_empty() {
        clusters.push(members.iter().sum::<f64>() / members.len() as f64);
    }
    Ok(MlEquilibria { clusters, non_converged })
}
