//! Nonlinear scheme built on the `f ln f` energy.
//!
//! Each step minimizes the strictly convex functional
//! `J(y) = <alpha (y - x^n), y - x^n> / (2 tau) + <f0, ln(f0 / D_h y)>_e`
//! over strictly increasing `y` with pinned endpoints. `J` is `+inf` on the
//! boundary of the admissible set, so its minimizer keeps the particles ordered.
//! The minimizer is found by damped Newton with step `omega(lambda)`.

use crate::error::{PmeError, Result};
use crate::grid::{dtilde_unchecked, NodeField, StaggeredGrid};
use crate::newton::{self, Damping, NewtonReport, NewtonSettings};
use crate::trajectory::{require_admissible, InitialDensity, SchemeConfig, TrajectoryState};
use crate::tridiag::Tridiagonal;

/// `alpha_i = f0_i / (m (f0_i / D~_h x^n_i)^(m-1))`; zero where `f0_i = 0`.
pub fn mass_coefficients(x_old: &[f64], f0: &InitialDensity, grid: &StaggeredGrid, m: f64) -> Result<NodeField> {
    let dx = dtilde_unchecked(x_old, grid.h());
    let mut alpha = NodeField::zeros(dx.len());
    for (i, (a, (&f, &d))) in alpha.iter_mut().zip(f0.nodes.iter().zip(dx.iter())).enumerate() {
        if f > 0.0 {
            if !(d > 0.0) {
                return Err(PmeError::NonpositiveGradient { node: i, value: d });
            }
            *a = f.powf(2.0 - m) * d.powf(m - 1.0) / m;
            if !a.is_finite() {
                return Err(PmeError::Overflow { node: i });
            }
        }
    }
    Ok(alpha)
}

/// Writes the interior rows `i = 1..M-1` of the Case-1 residual and its Jacobian.
/// Row `i` lands at index `i - first` of `jac` and `r`.
pub(crate) fn fill_interior(
    x: &[f64],
    x_old: &[f64],
    alpha: &[f64],
    f0_edges: &[f64],
    h: f64,
    tau: f64,
    first: usize,
    jac: &mut Tridiagonal,
    r: &mut [f64],
) -> Result<()> {
    let m = x.len() - 1;
    let h2 = h * h;
    // flux q_e = f0_e / D_e and its sensitivity w_e = f0_e / D_e^2 on each edge
    let mut q_prev = 0.0;
    let mut w_prev = 0.0;
    for e in 0..m {
        let d = (x[e + 1] - x[e]) / h;
        if !(d > 0.0) {
            return Err(PmeError::NotAdmissible { node: e + 1 });
        }
        let q = f0_edges[e] / d;
        let w = q / d;
        if e >= 1 {
            let i = e;
            let row = i - first;
            r[row] = alpha[i] * (x[i] - x_old[i]) / tau + (q - q_prev) / h;
            jac.diag[row] = alpha[i] / tau + (w + w_prev) / h2;
            jac.lower[row] = -w_prev / h2;
            jac.upper[row] = -w / h2;
        }
        q_prev = q;
        w_prev = w;
    }
    Ok(())
}

/// Interior residual of the Case-1 step; endpoint entries are zero.
pub fn residual_case1(
    x_new: &[f64],
    x_old: &[f64],
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
) -> Result<NodeField> {
    require_admissible(x_old)?;
    require_admissible(x_new)?;
    let alpha = mass_coefficients(x_old, f0, grid, cfg.m)?;
    let n = grid.node_count();
    let mut jac = Tridiagonal::zeros(n);
    let mut r = NodeField::zeros(n);
    fill_interior(x_new, x_old, &alpha, &f0.edges, grid.h(), cfg.tau, 0, &mut jac, &mut r)?;
    Ok(r)
}

/// Jacobian of the interior residual and `-r`, over the unknowns `x_1..x_{M-1}`.
///
/// `h` times this matrix is the Hessian of [`energy_j`] in those unknowns.
pub fn newton_system(
    x_k: &[f64],
    x_old: &[f64],
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
) -> Result<(Tridiagonal, Vec<f64>)> {
    require_admissible(x_k)?;
    let alpha = mass_coefficients(x_old, f0, grid, cfg.m)?;
    let (jac, r) = interior_system(x_k, x_old, &alpha, f0, grid, cfg.tau)?;
    Ok((jac, r.into_iter().map(|v| -v).collect()))
}

fn interior_system(
    x: &[f64],
    x_old: &[f64],
    alpha: &[f64],
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    tau: f64,
) -> Result<(Tridiagonal, Vec<f64>)> {
    let unknowns = grid.cells() - 1;
    let mut jac = Tridiagonal::zeros(unknowns);
    let mut r = vec![0.0; unknowns];
    fill_interior(x, x_old, alpha, &f0.edges, grid.h(), tau, 1, &mut jac, &mut r)?;
    Ok((jac, r))
}

/// `lambda = sqrt(<J', delta> / a)` with `a = h min_{0<i<M} f0(X_i)`, where
/// `delta = (J'')^{-1} J'`.
pub fn newton_decrement(delta_x: &[f64], gradient: &[f64], f0: &InitialDensity, grid: &StaggeredGrid) -> Result<f64> {
    if delta_x.len() != gradient.len() {
        return Err(PmeError::LengthMismatch { expected: gradient.len(), got: delta_x.len() });
    }
    let a = grid.h() * f0.interior_min();
    decrement_with_scale(delta_x, gradient, a)
}

pub(crate) fn decrement_with_scale(delta_x: &[f64], gradient: &[f64], a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(PmeError::InvalidParameter(format!(
            "decrement scale a = h min f0 must be positive, got {a}"
        )));
    }
    let dot: f64 = gradient.iter().zip(delta_x).map(|(g, d)| g * d).sum();
    Ok((dot.abs() / a).sqrt())
}

/// `E1(x) = <f0, ln(f0 / D_h x)>_e`, `+inf` when two particles coincide.
pub fn discrete_energy_e1(x: &[f64], f0: &InitialDensity, grid: &StaggeredGrid) -> f64 {
    let h = grid.h();
    let mut sum = 0.0;
    for (w, &f) in x.windows(2).zip(f0.edges.iter()) {
        let d = (w[1] - w[0]) / h;
        if !(d > 0.0) {
            return f64::INFINITY;
        }
        if f > 0.0 {
            sum += f * (f / d).ln();
        }
    }
    h * sum
}

/// Gradient of [`discrete_energy_e1`] with respect to every node position.
pub fn energy_e1_gradient(x: &[f64], f0: &InitialDensity, grid: &StaggeredGrid) -> Result<NodeField> {
    let h = grid.h();
    let mut g = NodeField::zeros(x.len());
    for (e, w) in x.windows(2).enumerate() {
        let d = (w[1] - w[0]) / h;
        if !(d > 0.0) {
            return Err(PmeError::NotAdmissible { node: e + 1 });
        }
        let q = f0.edges[e] / d;
        g[e] += q;
        g[e + 1] -= q;
    }
    Ok(g)
}

/// The per-step functional whose unique minimizer is the Case-1 update.
pub fn energy_j(y: &[f64], x_old: &[f64], f0: &InitialDensity, grid: &StaggeredGrid, cfg: &SchemeConfig) -> f64 {
    if !crate::trajectory::check_admissible(y) {
        return f64::INFINITY;
    }
    let Ok(alpha) = mass_coefficients(x_old, f0, grid, cfg.m) else {
        return f64::NAN;
    };
    let diff: Vec<f64> = y.iter().zip(x_old).map(|(a, b)| a - b).collect();
    let weighted: Vec<f64> = diff.iter().zip(alpha.iter()).map(|(d, a)| a * d).collect();
    let kinetic = crate::grid::inner_node(&weighted, &diff, grid).unwrap_or(f64::NAN);
    kinetic / (2.0 * cfg.tau) + discrete_energy_e1(y, f0, grid)
}

/// One fixed-boundary Case-1 step by damped Newton, starting from `x^n`.
pub fn step_case1(
    state: &TrajectoryState,
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
) -> Result<(TrajectoryState, NewtonReport)> {
    step_case1_from(state, None, f0, grid, cfg)
}

/// [`step_case1`] with Newton started from `guess` when it is admissible.
pub(crate) fn step_case1_from(
    state: &TrajectoryState,
    guess: Option<&[f64]>,
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
) -> Result<(TrajectoryState, NewtonReport)> {
    let x_old = &state.x;
    if x_old.len() != grid.node_count() {
        return Err(PmeError::LengthMismatch { expected: grid.node_count(), got: x_old.len() });
    }
    require_admissible(x_old)?;
    f0.require_positive_interior()?;
    let alpha = mass_coefficients(x_old, f0, grid, cfg.m)?;
    let settings = NewtonSettings {
        tol: cfg.tol_for(grid),
        max_iter: cfg.newton_max_iter,
        damping: Damping::Decrement {
            h_over_a: 1.0 / f0.interior_min(),
            lambda_prime: cfg.lambda_prime,
        },
    };
    let start = newton::starting_point(x_old, guess, [true, true]);
    let (x, report) = newton::solve(start, 1, &settings, |x| {
        interior_system(x, x_old, &alpha, f0, grid, cfg.tau)
    })?;
    require_admissible(&x)?;
    Ok((
        TrajectoryState { x: NodeField(x), n: state.n + 1, t: state.t + cfg.tau },
        report,
    ))
}
