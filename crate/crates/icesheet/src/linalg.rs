//! Small dense solvers shared by the implicit Fokker-Planck stepper and
//! the collocation Newton iteration.

/// Solve a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i-1]` in row i (lower[0] unused), `diag[i]`
/// multiplies `x[i]`, `upper[i]` multiplies `x[i+1]` (last entry unused).
/// `rhs` is overwritten with the solution. Scratch buffers are caller-owned
/// so repeated solves do not allocate.
pub fn thomas_solve(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    scratch.clear();
    scratch.resize(n, 0.0);

    scratch[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = upper[i] / m;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}
