//! Staggered difference calculus on a uniform Lagrangian reference grid.
//!
//! Node values live at `X_i = X0 + i h` for `i = 0..=M`; edge values live at the
//! half-integer points `X_{i+1/2}` and are stored with index `i = 0..M`.
//! `D_h` maps nodes to edges, `d_h` maps edges back to interior nodes, and the
//! two are adjoint under the trapezoidal node product and the plain edge product.

use std::ops::{Deref, DerefMut};

use crate::error::{PmeError, Result};

/// Uniform reference grid with `cells` cells of width `h` starting at `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaggeredGrid {
    x0: f64,
    h: f64,
    cells: usize,
}

impl StaggeredGrid {
    pub fn new(x0: f64, h: f64, cells: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(PmeError::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if cells < 2 {
            return Err(PmeError::InvalidGrid(format!("need at least 2 cells, got {cells}")));
        }
        if !x0.is_finite() {
            return Err(PmeError::InvalidGrid("left endpoint is not finite".into()));
        }
        Ok(Self { x0, h, cells })
    }

    /// Grid covering `[a, b]` with `cells` equal cells.
    pub fn over(a: f64, b: f64, cells: usize) -> Result<Self> {
        if !(b > a) {
            return Err(PmeError::InvalidGrid(format!("empty interval [{a}, {b}]")));
        }
        Self::new(a, (b - a) / cells.max(1) as f64, cells)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of cells `M`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn node_count(&self) -> usize {
        self.cells + 1
    }

    pub fn edge_count(&self) -> usize {
        self.cells
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Position of edge `i`, i.e. `X_{i+1/2}`.
    pub fn edge(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h
    }

    pub fn x_end(&self) -> f64 {
        self.node(self.cells)
    }

    /// The reference coordinates `X_i` as a node field (the identity trajectory).
    pub fn nodes(&self) -> NodeField {
        NodeField((0..self.node_count()).map(|i| self.node(i)).collect())
    }

    pub fn edges(&self) -> EdgeField {
        EdgeField((0..self.edge_count()).map(|i| self.edge(i)).collect())
    }

    fn check_nodes(&self, len: usize) -> Result<()> {
        if len != self.node_count() {
            return Err(PmeError::LengthMismatch { expected: self.node_count(), got: len });
        }
        Ok(())
    }

    fn check_edges(&self, len: usize) -> Result<()> {
        if len != self.edge_count() {
            return Err(PmeError::LengthMismatch { expected: self.edge_count(), got: len });
        }
        Ok(())
    }
}

macro_rules! field_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl FromIterator<f64> for $name {
            fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
                Self(iter.into_iter().collect())
            }
        }
    };
}

field_newtype!(
    /// Values on the nodes `X_0, ..., X_M`.
    NodeField
);
field_newtype!(
    /// Values on the edges `X_{1/2}, ..., X_{M-1/2}`.
    EdgeField
);

/// Forward difference `(D_h l)_{i+1/2} = (l_{i+1} - l_i) / h`.
pub fn apply_dh_forward(l: &[f64], grid: &StaggeredGrid) -> Result<EdgeField> {
    grid.check_nodes(l.len())?;
    let h = grid.h();
    Ok(l.windows(2).map(|w| (w[1] - w[0]) / h).collect())
}

/// Backward difference of an edge field onto interior nodes,
/// `(d_h phi)_i = (phi_{i+1/2} - phi_{i-1/2}) / h` for `i = 1..M-1`.
///
/// The endpoint entries are set to zero; no scheme reads them.
pub fn apply_dh_backward(phi: &[f64], grid: &StaggeredGrid) -> Result<NodeField> {
    grid.check_edges(phi.len())?;
    let h = grid.h();
    let mut out = NodeField::zeros(grid.node_count());
    for i in 1..grid.cells() {
        out[i] = (phi[i] - phi[i - 1]) / h;
    }
    Ok(out)
}

/// Second-order node derivative: centered in the interior, one-sided
/// three-point stencils at both ends.
pub fn apply_dtilde(l: &[f64], grid: &StaggeredGrid) -> Result<NodeField> {
    grid.check_nodes(l.len())?;
    Ok(dtilde_unchecked(l, grid.h()))
}

pub(crate) fn dtilde_unchecked(l: &[f64], h: f64) -> NodeField {
    let m = l.len() - 1;
    let two_h = 2.0 * h;
    let mut out = NodeField::zeros(l.len());
    out[0] = (4.0 * l[1] - l[2] - 3.0 * l[0]) / two_h;
    for i in 1..m {
        out[i] = (l[i + 1] - l[i - 1]) / two_h;
    }
    out[m] = (l[m - 2] - 4.0 * l[m - 1] + 3.0 * l[m]) / two_h;
    out
}

/// One-sided first differences at the two ends: `((l_1 - l_0)/h, (l_M - l_{M-1})/h)`.
pub fn apply_dbar(l: &[f64], grid: &StaggeredGrid) -> Result<(f64, f64)> {
    grid.check_nodes(l.len())?;
    let m = grid.cells();
    let h = grid.h();
    Ok(((l[1] - l[0]) / h, (l[m] - l[m - 1]) / h))
}

/// Trapezoidal node inner product `h (l_0 g_0 / 2 + sum l_i g_i + l_M g_M / 2)`.
pub fn inner_node(l: &[f64], g: &[f64], grid: &StaggeredGrid) -> Result<f64> {
    grid.check_nodes(l.len())?;
    grid.check_nodes(g.len())?;
    let m = grid.cells();
    let interior: f64 = (1..m).map(|i| l[i] * g[i]).sum();
    Ok(grid.h() * (0.5 * l[0] * g[0] + interior + 0.5 * l[m] * g[m]))
}

/// Edge inner product `h sum phi_{i+1/2} psi_{i+1/2}`.
pub fn inner_edge(phi: &[f64], psi: &[f64], grid: &StaggeredGrid) -> Result<f64> {
    grid.check_edges(phi.len())?;
    grid.check_edges(psi.len())?;
    Ok(grid.h() * phi.iter().zip(psi).map(|(a, b)| a * b).sum::<f64>())
}

/// Weights for the density error norm: `x_{i+1} - x_{i-1}` inside, one-sided cells at the ends.
pub fn density_weights(x: &[f64]) -> NodeField {
    let m = x.len() - 1;
    let mut w = NodeField::zeros(x.len());
    w[0] = x[1] - x[0];
    for i in 1..m {
        w[i] = x[i + 1] - x[i - 1];
    }
    w[m] = x[m] - x[m - 1];
    w
}

/// Weights for the trajectory error norm: `2h` inside, `h` at the ends.
pub fn trajectory_weights(grid: &StaggeredGrid) -> NodeField {
    let mut w = NodeField(vec![2.0 * grid.h(); grid.node_count()]);
    w[0] = grid.h();
    let m = grid.cells();
    w[m] = grid.h();
    w
}

/// `sqrt(1/2 (e_0^2 w_0 + sum e_i^2 w_i + e_M^2 w_M))`.
pub fn norm_l2_weighted(e: &[f64], weights: &[f64]) -> Result<f64> {
    if e.len() != weights.len() {
        return Err(PmeError::LengthMismatch { expected: e.len(), got: weights.len() });
    }
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
        return Err(PmeError::NegativeWeight { index, value });
    }
    let sum: f64 = e.iter().zip(weights).map(|(v, w)| v * v * w).sum();
    Ok((0.5 * sum).sqrt())
}

pub fn norm_linf(e: &[f64]) -> f64 {
    e.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(m: usize) -> StaggeredGrid {
        StaggeredGrid::new(0.0, 1.0, m).unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(StaggeredGrid::new(0.0, 0.0, 4).is_err());
        assert!(StaggeredGrid::new(0.0, -1.0, 4).is_err());
        assert!(StaggeredGrid::new(0.0, 0.1, 1).is_err());
        let g = StaggeredGrid::over(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.edge(0), -0.75);
    }

    #[test]
    fn forward_difference() {
        let g = unit_grid(2);
        assert_eq!(apply_dh_forward(&[0.0, 1.0, 4.0], &g).unwrap().0, vec![1.0, 3.0]);
        assert_eq!(apply_dh_forward(&[2.0, 2.0, 2.0], &g).unwrap().0, vec![0.0, 0.0]);
        let g = StaggeredGrid::new(0.5, 0.25, 4).unwrap();
        let d = apply_dh_forward(&g.nodes(), &g).unwrap();
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(matches!(
            apply_dh_forward(&[1.0, 2.0], &g),
            Err(PmeError::LengthMismatch { expected: 5, got: 2 })
        ));
    }

    #[test]
    fn backward_difference() {
        let g = unit_grid(2);
        assert_eq!(apply_dh_backward(&[2.0, 5.0], &g).unwrap().0, vec![0.0, 3.0, 0.0]);
        let g = unit_grid(5);
        let d = apply_dh_backward(&[7.0; 5], &g).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
        assert!(apply_dh_backward(&[1.0; 6], &g).is_err());
    }

    #[test]
    fn dtilde_is_exact_on_quadratics() {
        let g = unit_grid(2);
        assert_eq!(apply_dtilde(&[0.0, 1.0, 4.0], &g).unwrap().0, vec![0.0, 2.0, 4.0]);
        assert_eq!(apply_dtilde(&[3.0; 3], &g).unwrap().0, vec![0.0; 3]);
        let g = StaggeredGrid::new(-1.0, 0.2, 10).unwrap();
        let q: Vec<f64> = g.nodes().iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        let d = apply_dtilde(&q, &g).unwrap();
        for (i, v) in d.iter().enumerate() {
            assert!((v - (6.0 * g.node(i) - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn dbar_ends() {
        let g = unit_grid(2);
        assert_eq!(apply_dbar(&[0.0, 1.0, 4.0], &g).unwrap(), (1.0, 3.0));
        assert_eq!(apply_dbar(&[5.0; 3], &g).unwrap(), (0.0, 0.0));
        assert_eq!(apply_dbar(&g.nodes(), &g).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn inner_products() {
        let g = StaggeredGrid::new(0.0, 0.5, 2).unwrap();
        assert_eq!(inner_node(&[1.0; 3], &[1.0; 3], &g).unwrap(), 1.0);
        assert_eq!(inner_edge(&[1.0; 2], &[1.0; 2], &g).unwrap(), 1.0);
        assert_eq!(inner_node(&[0.0; 3], &[4.0; 3], &g).unwrap(), 0.0);
        assert!(inner_edge(&[1.0; 3], &[1.0; 2], &g).is_err());
    }

    #[test]
    fn error_norms() {
        let g = StaggeredGrid::new(0.0, 0.5, 2).unwrap();
        let w = trajectory_weights(&g);
        assert_eq!(w.0, vec![0.5, 1.0, 0.5]);
        assert_eq!(norm_l2_weighted(&[1.0; 3], &w).unwrap(), 1.0);
        assert_eq!(norm_linf(&[1.0, -5.0, 2.0]), 5.0);
        assert_eq!(norm_linf(&[0.0; 3]), 0.0);
        assert_eq!(norm_l2_weighted(&[0.0; 3], &w).unwrap(), 0.0);
        assert!(matches!(
            norm_l2_weighted(&[1.0; 3], &[1.0, -1.0, 1.0]),
            Err(PmeError::NegativeWeight { index: 1, .. })
        ));
        assert_eq!(density_weights(&[0.0, 0.25, 1.0]).0, vec![0.25, 1.0, 0.75]);
    }
}
