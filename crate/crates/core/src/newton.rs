//! Newton driver shared by the nonlinear solves.
//!
//! Each problem supplies, for an iterate `x`, the Jacobian of its residual and
//! the residual itself over a contiguous block of unknown node indices.

use crate::error::{PmeError, Result};
use crate::trajectory::{first_inversion, LAMBDA_STAR};
use crate::tridiag::Tridiagonal;

/// Outcome of one nonlinear solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    pub final_lambda: f64,
    /// Jacobi-scaled residual norm `|| r_i / A_ii ||_2` at the accepted iterate.
    pub final_residual_norm: f64,
    pub converged: bool,
    /// Iterations whose step had to be cut back to stay admissible.
    pub safeguard_cuts: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Damping {
    /// Step `omega(lambda)` with `lambda^2 = (h / a) r . A^{-1} r`.
    Decrement { h_over_a: f64, lambda_prime: f64 },
    /// Plain Newton steps, cut back only to stay admissible.
    Full,
}

pub(crate) struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: Damping,
}

const MAX_HALVINGS: usize = 30;

/// Step length as a function of the Newton decrement.
///
/// The `1/lambda` branch is capped at a full step for `lambda' < lambda < 1`.
pub fn damping_omega(lambda: f64, lambda_prime: f64) -> f64 {
    if lambda > lambda_prime {
        (1.0 / lambda).min(1.0)
    } else if lambda >= LAMBDA_STAR {
        (1.0 - lambda) / (lambda * (3.0 - lambda))
    } else {
        1.0
    }
}

pub(crate) fn scaled_residual_norm(jac: &Tridiagonal, r: &[f64]) -> f64 {
    r.iter()
        .zip(&jac.diag)
        .map(|(ri, di)| (ri / di).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `guess` with pinned endpoints reset to `x_old`, or `x_old` itself when there is
/// no usable guess.
pub(crate) fn starting_point(x_old: &[f64], guess: Option<&[f64]>, pinned: [bool; 2]) -> Vec<f64> {
    let Some(g) = guess.filter(|g| g.len() == x_old.len()) else {
        return x_old.to_vec();
    };
    let mut x = g.to_vec();
    let last = x.len() - 1;
    if pinned[0] {
        x[0] = x_old[0];
    }
    if pinned[1] {
        x[last] = x_old[last];
    }
    if first_inversion(&x).is_some() || x.iter().any(|v| !v.is_finite()) {
        return x_old.to_vec();
    }
    x
}

/// Runs Newton on the unknowns `x[offset .. offset + n]`, all other entries held fixed.
pub(crate) fn solve<F>(
    mut x: Vec<f64>,
    offset: usize,
    settings: &NewtonSettings,
    mut assemble: F,
) -> Result<(Vec<f64>, NewtonReport)>
where
    F: FnMut(&[f64]) -> Result<(Tridiagonal, Vec<f64>)>,
{
    let mut report = NewtonReport::default();
    let mut trial = x.clone();
    loop {
        let (jac, r) = assemble(&x)?;
        let res = scaled_residual_norm(&jac, &r);
        report.final_residual_norm = res;
        // A warm start can already pass the test; one step from there costs a
        // solve and lands on the minimizer to rounding.
        if res <= settings.tol && report.iterations > 0 {
            report.converged = true;
            return Ok((x, report));
        }
        if report.iterations >= settings.max_iter {
            return Err(PmeError::NewtonFailed {
                iterations: report.iterations,
                residual: res,
                lambda: report.final_lambda,
            });
        }
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = jac.solve(&neg_r)?;
        let mut omega = match settings.damping {
            Damping::Decrement { h_over_a, lambda_prime } => {
                let rd: f64 = r.iter().zip(&delta).map(|(a, b)| a * b).sum();
                let lambda = (h_over_a * rd.abs()).sqrt();
                report.final_lambda = lambda;
                damping_omega(lambda, lambda_prime)
            }
            Damping::Full => {
                report.final_lambda = f64::NAN;
                1.0
            }
        };
        let mut halvings = 0;
        loop {
            trial.copy_from_slice(&x);
            for (k, d) in delta.iter().enumerate() {
                trial[offset + k] += omega * d;
            }
            match first_inversion(&trial) {
                None => break,
                Some(node) if halvings >= MAX_HALVINGS => {
                    return Err(PmeError::NotAdmissible { node });
                }
                Some(_) => {
                    omega *= 0.5;
                    halvings += 1;
                }
            }
        }
        if halvings > 0 {
            report.safeguard_cuts += 1;
        }
        std::mem::swap(&mut x, &mut trial);
        report.iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_branches() {
        assert_eq!(damping_omega(0.2, 0.9), 1.0);
        assert_eq!(damping_omega(2.0, 0.9), 0.5);
        assert!((damping_omega(0.5, 0.9) - 0.4).abs() < 1e-15);
        assert_eq!(damping_omega(0.0, 0.9), 1.0);
    }

    #[test]
    fn omega_is_a_step_fraction() {
        for k in 0..=1000 {
            let lambda = k as f64 * 0.01;
            for lp in [LAMBDA_STAR, 0.5, 0.9, 0.99] {
                let w = damping_omega(lambda, lp);
                assert!(w > 0.0 && w <= 1.0, "lambda={lambda} lp={lp} w={w}");
            }
        }
    }
}
