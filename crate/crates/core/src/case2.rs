//! Linear scheme built on the `1/(2f)` energy.
//!
//! Row `i` of the step reads
//! `c_i (x_i^{n+1} - x_i^n) / tau = d_h(D_h x^{n+1} / f0)_i` with
//! `c_i = (D~_h x^n)_i^{m+1} / (m f0_i^m)`. The matrix is tridiagonal with a
//! positive diagonal, nonpositive off-diagonals and row sums `c_i / tau`, so it is
//! an M-matrix and the update inherits a discrete extremum principle.

use crate::error::{PmeError, Result};
use crate::grid::{dtilde_unchecked, NodeField, StaggeredGrid};
use crate::trajectory::{require_admissible, InitialDensity, SchemeConfig, TrajectoryState};
pub use crate::tridiag::{solve_tridiagonal, Tridiagonal};

/// `c_i = (D~_h x^n)_i^{m+1} / (m f0_i^m)`; zero where `f0_i = 0`.
///
/// Near a support edge `f0` is tiny and `c_i` can be huge; that row then pins
/// its particle. A non-finite value is reported rather than clamped.
pub fn mass_coefficients(x_old: &[f64], f0: &InitialDensity, grid: &StaggeredGrid, m: f64) -> Result<NodeField> {
    let dx = dtilde_unchecked(x_old, grid.h());
    let mut c = NodeField::zeros(dx.len());
    for (i, (ci, (&f, &d))) in c.iter_mut().zip(f0.nodes.iter().zip(dx.iter())).enumerate() {
        if f > 0.0 {
            if !(d > 0.0) {
                return Err(PmeError::NonpositiveGradient { node: i, value: d });
            }
            *ci = d.powf(m + 1.0) / (m * f.powf(m));
            if !ci.is_finite() {
                return Err(PmeError::Overflow { node: i });
            }
        }
    }
    Ok(c)
}

/// Residual `c_i (x_i - x_i^n)/tau - d_h(D_h x / f0)_i` and its (constant) Jacobian
/// for the interior rows, written at index `i - first`.
pub(crate) fn fill_interior(
    x: &[f64],
    x_old: &[f64],
    c: &[f64],
    f0_edges: &[f64],
    h: f64,
    tau: f64,
    first: usize,
    jac: &mut Tridiagonal,
    r: &mut [f64],
) {
    let m = x.len() - 1;
    let h2 = h * h;
    for i in 1..m {
        let row = i - first;
        let inv_l = 1.0 / f0_edges[i - 1];
        let inv_r = 1.0 / f0_edges[i];
        let p_l = (x[i] - x[i - 1]) / h * inv_l;
        let p_r = (x[i + 1] - x[i]) / h * inv_r;
        r[row] = c[i] * (x[i] - x_old[i]) / tau - (p_r - p_l) / h;
        jac.diag[row] = c[i] / tau + (inv_l + inv_r) / h2;
        jac.lower[row] = -inv_l / h2;
        jac.upper[row] = -inv_r / h2;
    }
}

/// The linear system for `x_1^{n+1} .. x_{M-1}^{n+1}` with the endpoints
/// eliminated onto the right-hand side.
pub fn assemble_case2(
    state: &TrajectoryState,
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
) -> Result<(Tridiagonal, Vec<f64>)> {
    let x_old = &state.x;
    if x_old.len() != grid.node_count() {
        return Err(PmeError::LengthMismatch { expected: grid.node_count(), got: x_old.len() });
    }
    f0.require_positive_interior()?;
    let c = mass_coefficients(x_old, f0, grid, cfg.m)?;
    let m = grid.cells();
    let h2 = grid.h() * grid.h();
    let mut jac = Tridiagonal::zeros(m - 1);
    let mut rhs = vec![0.0; m - 1];
    for i in 1..m {
        let row = i - 1;
        let inv_l = 1.0 / f0.edges[i - 1];
        let inv_r = 1.0 / f0.edges[i];
        jac.diag[row] = c[i] / cfg.tau + (inv_l + inv_r) / h2;
        jac.lower[row] = -inv_l / h2;
        jac.upper[row] = -inv_r / h2;
        rhs[row] = c[i] * x_old[i] / cfg.tau;
    }
    rhs[0] += x_old[0] / (f0.edges[0] * h2);
    rhs[m - 2] += x_old[m] / (f0.edges[m - 1] * h2);
    Ok((jac, rhs))
}

/// One fixed-boundary Case-2 step: assemble, verify the M-matrix pattern, solve.
pub fn step_case2(
    state: &TrajectoryState,
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
) -> Result<TrajectoryState> {
    require_admissible(&state.x)?;
    let (jac, rhs) = assemble_case2(state, f0, grid, cfg)?;
    if let Some(row) = jac.m_matrix_violation() {
        return Err(PmeError::NotMMatrix { row: row + 1 });
    }
    let interior = jac.solve(&rhs)?;
    let mut x = state.x.clone();
    x[1..grid.cells()].copy_from_slice(&interior);
    require_admissible(&x)?;
    Ok(TrajectoryState { x, n: state.n + 1, t: state.t + cfg.tau })
}

/// `E2(x) = 1/2 <D_h x / f0, D_h x>_e`.
pub fn discrete_energy_e2(x: &[f64], f0: &InitialDensity, grid: &StaggeredGrid) -> f64 {
    let h = grid.h();
    let sum: f64 = x
        .windows(2)
        .zip(f0.edges.iter())
        .map(|(w, &f)| {
            let d = (w[1] - w[0]) / h;
            d * d / f
        })
        .sum();
    0.5 * h * sum
}

/// Gradient of [`discrete_energy_e2`] with respect to every node position.
pub fn energy_e2_gradient(x: &[f64], f0: &InitialDensity, grid: &StaggeredGrid) -> NodeField {
    let h = grid.h();
    let mut g = NodeField::zeros(x.len());
    for (e, w) in x.windows(2).enumerate() {
        let p = (w[1] - w[0]) / h / f0.edges[e];
        g[e] -= p;
        g[e + 1] += p;
    }
    g
}
