//! Shared test support: an independent adaptive ODE oracle and small
//! numeric helpers. Nothing here touches the solver paths under test.

#![allow(dead_code)]

use icesheet::model::{AdditiveDrift, ModelParams};

/// Adaptive Dormand-Prince RK45 integration of `dx/dt = f(x)`, evaluated
/// at the requested output times. Entirely independent of the
/// Euler-Maruyama path under test.
pub fn rk45_ode(
    f: impl Fn(f64) -> f64,
    x0: f64,
    out_times: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Vec<f64> {
    // Dormand-Prince coefficients
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut out = Vec::with_capacity(out_times.len());
    let mut t = 0.0_f64;
    let mut x = x0;
    let mut h = 1e-3_f64;
    for &t_target in out_times {
        if t_target <= t {
            out.push(x);
            continue;
        }
        while t < t_target {
            let h_step = h.min(t_target - t);
            let mut k = [0.0_f64; 7];
            k[0] = f(x);
            for s in 0..6 {
                let mut xs = x;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    xs += h_step * A[s][j] * kj;
                }
                k[s + 1] = f(xs);
            }
            let mut x5 = x;
            let mut x4 = x;
            for j in 0..7 {
                x5 += h_step * B5[j] * k[j];
                x4 += h_step * B4[j] * k[j];
            }
            let err = (x5 - x4).abs();
            let tol = abs_tol + rel_tol * x5.abs().max(x.abs());
            if err <= tol {
                t += h_step;
                x = x5;
            }
            let safety = 0.9 * (tol / err.max(1e-300)).powf(0.2);
            h = (h_step * safety.clamp(0.2, 5.0)).clamp(1e-9, 1.0);
        }
        out.push(x);
    }
    out
}

/// Newton root of F(z) near a starting point.
pub fn f_root(params: &ModelParams, start: f64) -> f64 {
    let d = AdditiveDrift::new(params);
    let mut z = start;
    for _ in 0..200 {
        z -= d.f(z) / d.d1(z);
    }
    z
}

/// Newton root of the drift f(X) near a starting point.
pub fn drift_root(params: &ModelParams, start: f64) -> f64 {
    let mut x = start;
    for _ in 0..200 {
        x -= params.drift(x) / params.drift_prime(x);
    }
    x
}

/// Newton root of the stationary-mode relation `f(X) = eps^2/2`.
pub fn stationary_mode_root(params: &ModelParams, start: f64) -> f64 {
    let target = 0.5 * params.eps_sq();
    let mut x = start;
    for _ in 0..200 {
        x -= (params.drift(x) - target) / params.drift_prime(x);
    }
    x
}

/// max |a - b| over paired samples.
pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
