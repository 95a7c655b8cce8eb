//! Strategies and checks shared by the property tests and the acceptance run.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use pme_core::case1::{energy_j, newton_system, residual_case1, step_case1};
use pme_core::case2::step_case2;
use pme_core::grid::{apply_dh_backward, apply_dh_forward, inner_edge, inner_node};
use pme_core::tridiag::{solve_tridiagonal, Tridiagonal};
use pme_core::{InitialDensity, NodeField, SchemeCase, SchemeConfig, StaggeredGrid, TrajectoryState};

/// Random admissible data: a grid, a positive density, a perturbed old
/// trajectory and a perturbed evaluation point.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: StaggeredGrid,
    pub f0: InitialDensity,
    pub x_old: Vec<f64>,
    pub y: Vec<f64>,
    pub m: f64,
    pub tau: f64,
}

pub fn setup() -> impl Strategy<Value = Setup> {
    (4usize..24, 1.2f64..4.0, 1e-3f64..1e-1).prop_flat_map(|(cells, m, tau)| {
        let n = cells + 1;
        (
            prop::collection::vec(0.2f64..3.0, n),
            prop::collection::vec(-0.2f64..0.2, n),
            prop::collection::vec(-0.3f64..0.3, n),
        )
            .prop_map(move |(dens, p_old, p_new)| {
                let grid = StaggeredGrid::over(0.0, 1.0, cells).unwrap();
                let h = grid.h();
                let f0 = InitialDensity::from_nodes(&grid, NodeField(dens), None).unwrap();
                // below h/4 the one-sided end derivative of x_old stays positive
                let x_old: Vec<f64> = (0..n).map(|i| grid.node(i) + p_old[i] * h).collect();
                let mut y: Vec<f64> = (0..n).map(|i| x_old[i] + p_new[i] * h * 0.5).collect();
                y[0] = x_old[0];
                y[cells] = x_old[cells];
                Setup { grid, f0, x_old, y, m, tau }
            })
    })
}

fn case1(s: &Setup) -> SchemeConfig {
    SchemeConfig::new(SchemeCase::Case1, s.m, s.tau, 1.0).unwrap()
}

pub fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|q| q * q).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

/// `h r` against central differences of `J`.
pub fn check_gradient(s: &Setup) -> Result<(), TestCaseError> {
    let c = case1(s);
    let h = s.grid.h();
    let r = residual_case1(&s.y, &s.x_old, &s.f0, &s.grid, &c).unwrap();
    let analytic: Vec<f64> = (1..s.grid.cells()).map(|i| h * r[i]).collect();
    let eps = 1e-5 * h;
    let fd: Vec<f64> = (1..s.grid.cells())
        .map(|i| {
            let mut p = s.y.clone();
            let mut q = s.y.clone();
            p[i] += eps;
            q[i] -= eps;
            (energy_j(&p, &s.x_old, &s.f0, &s.grid, &c) - energy_j(&q, &s.x_old, &s.f0, &s.grid, &c)) / (2.0 * eps)
        })
        .collect();
    let err = rel(&fd, &analytic);
    prop_assert!(err < 1e-8, "relative gradient error {err}");
    Ok(())
}

/// `h` times the Newton matrix against central differences of the gradient.
pub fn check_hessian(s: &Setup) -> Result<(), TestCaseError> {
    let c = case1(s);
    let h = s.grid.h();
    let cells = s.grid.cells();
    let (jac, _) = newton_system(&s.y, &s.x_old, &s.f0, &s.grid, &c).unwrap();
    let dense = jac.to_dense();
    let eps = 1e-6 * h;
    let mut fd = Vec::new();
    let mut exact = Vec::new();
    for j in 1..cells {
        let mut p = s.y.clone();
        let mut q = s.y.clone();
        p[j] += eps;
        q[j] -= eps;
        let rp = residual_case1(&p, &s.x_old, &s.f0, &s.grid, &c).unwrap();
        let rq = residual_case1(&q, &s.x_old, &s.f0, &s.grid, &c).unwrap();
        for i in 1..cells {
            fd.push(h * (rp[i] - rq[i]) / (2.0 * eps));
            exact.push(h * dense[i - 1][j - 1]);
        }
    }
    let err = rel(&fd, &exact);
    prop_assert!(err < 1e-6, "relative Hessian error {err}");
    Ok(())
}

pub fn tridiagonal_system() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..40, prop::collection::vec(-1.0f64..1.0, 160))
}

pub fn check_thomas(n: usize, seed: &[f64]) -> Result<(), TestCaseError> {
    // diagonally dominant rows
    let lower: Vec<f64> = seed[..n].to_vec();
    let upper: Vec<f64> = seed[40..40 + n].to_vec();
    let diag: Vec<f64> = seed[80..80 + n].iter().map(|v| 2.5 + v).collect();
    let rhs: Vec<f64> = seed[120..120 + n].to_vec();
    let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
    let t = Tridiagonal { lower, diag, upper };
    let expected = dense_solve(t.to_dense(), rhs);
    for (a, b) in x.iter().zip(&expected) {
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "thomas {a} vs dense {b}");
    }
    Ok(())
}

pub fn adjoint_fields() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..40, prop::collection::vec(-1.0f64..1.0, 82))
}

/// `<D_h l, phi>_e = -<l, d_h phi>` for `l` vanishing at both ends.
pub fn check_adjoint(cells: usize, seed: &[f64]) -> Result<(), TestCaseError> {
    let grid = StaggeredGrid::over(-1.0, 2.0, cells).unwrap();
    let mut l: Vec<f64> = seed[..=cells].to_vec();
    l[0] = 0.0;
    l[cells] = 0.0;
    let phi: Vec<f64> = seed[41..41 + cells].to_vec();
    let lhs = inner_edge(&apply_dh_forward(&l, &grid).unwrap(), &phi, &grid).unwrap();
    let rhs = -inner_node(&l, &apply_dh_backward(&phi, &grid).unwrap(), &grid).unwrap();
    prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    Ok(())
}

pub fn constant_data() -> impl Strategy<Value = (usize, f64, f64, u32)> {
    (2usize..60, 0.1f64..5.0, 1.1f64..5.0, 1u32..3)
}

pub fn check_fixed_point(cells: usize, c: f64, m: f64, case: u32) -> Result<(), TestCaseError> {
    let grid = StaggeredGrid::over(0.0, 1.0, cells).unwrap();
    let f0 = InitialDensity::sample(&grid, |_| c).unwrap();
    let cfg = SchemeConfig::new(SchemeCase::from_number(case).unwrap(), m, 0.01, 1.0).unwrap();
    let state = TrajectoryState::initial(&grid);
    let next = match cfg.case {
        SchemeCase::Case1 => step_case1(&state, &f0, &grid, &cfg).unwrap().0,
        SchemeCase::Case2 => step_case2(&state, &f0, &grid, &cfg).unwrap(),
    };
    for (a, b) in next.x.iter().zip(state.x.iter()) {
        prop_assert!((a - b).abs() <= 1e-13, "moved from {b} to {a}");
    }
    Ok(())
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}
