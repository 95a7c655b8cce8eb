//! State shared by both schemes: particle positions, initial density, scheme parameters.

use crate::error::{PmeError, Result};
use crate::grid::{dtilde_unchecked, EdgeField, NodeField, StaggeredGrid};

/// Lower end of the middle damping branch, `2 - sqrt(3)`.
pub const LAMBDA_STAR: f64 = 0.267_949_192_431_122_7;

/// Particle positions `x^n` at time level `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub x: NodeField,
    pub n: usize,
    pub t: f64,
}

impl TrajectoryState {
    /// `x(X, 0) = X`.
    pub fn initial(grid: &StaggeredGrid) -> Self {
        Self { x: grid.nodes(), n: 0, t: 0.0 }
    }

    pub fn left(&self) -> f64 {
        self.x[0]
    }

    pub fn right(&self) -> f64 {
        self.x[self.x.len() - 1]
    }
}

/// Initial density on the nodes of the reference grid, plus its edge values.
///
/// The edge values feed the flux terms `f0 / D_h x`; node values feed the mass
/// coefficients and the density recovery. Sampled data takes each edge value as
/// the mean of its two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    pub nodes: NodeField,
    pub edges: EdgeField,
    /// `(xi_1^0, xi_2^0)` when the data has compact support inside the domain.
    pub support: Option<(f64, f64)>,
}

impl InitialDensity {
    pub fn sample(grid: &StaggeredGrid, f0: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes: NodeField = (0..grid.node_count()).map(|i| f0(grid.node(i))).collect();
        Self::from_nodes(grid, nodes, None)
    }

    /// Samples data that vanishes at both ends of the grid, which is then its support.
    pub fn sample_support(grid: &StaggeredGrid, f0: impl Fn(f64) -> f64) -> Result<Self> {
        let mut nodes: NodeField = (0..grid.node_count()).map(|i| f0(grid.node(i))).collect();
        let m = grid.cells();
        nodes[0] = 0.0;
        nodes[m] = 0.0;
        Self::from_nodes(grid, nodes, Some((grid.x0(), grid.x_end())))
    }

    /// Node values with edge values `(f0_i + f0_{i+1}) / 2`.
    pub fn from_nodes(grid: &StaggeredGrid, nodes: NodeField, support: Option<(f64, f64)>) -> Result<Self> {
        let edges: EdgeField = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self::from_parts(grid, nodes, edges, support)
    }

    pub fn from_parts(
        grid: &StaggeredGrid,
        nodes: NodeField,
        edges: EdgeField,
        support: Option<(f64, f64)>,
    ) -> Result<Self> {
        if nodes.len() != grid.node_count() {
            return Err(PmeError::LengthMismatch { expected: grid.node_count(), got: nodes.len() });
        }
        if edges.len() != grid.edge_count() {
            return Err(PmeError::LengthMismatch { expected: grid.edge_count(), got: edges.len() });
        }
        if let Some(i) = nodes.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(PmeError::InvalidParameter(format!(
                "initial density must be finite and nonnegative, node {i} has {}",
                nodes[i]
            )));
        }
        if let Some(i) = edges.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(PmeError::InvalidParameter(format!(
                "initial density must be finite and nonnegative, edge {i} has {}",
                edges[i]
            )));
        }
        let d = Self { nodes, edges, support };
        if support.is_some() {
            d.validate_support()?;
        }
        Ok(d)
    }

    fn validate_support(&self) -> Result<()> {
        let m = self.nodes.len() - 1;
        if self.nodes[0] != 0.0 || self.nodes[m] != 0.0 {
            return Err(PmeError::InvalidParameter(
                "compactly supported data must vanish at both interfaces".into(),
            ));
        }
        self.require_positive_interior()
    }

    /// Both schemes divide by `f0` on interior nodes and on every edge.
    pub fn require_positive_interior(&self) -> Result<()> {
        let m = self.nodes.len() - 1;
        if let Some(i) = (1..m).find(|&i| !(self.nodes[i] > 0.0)) {
            return Err(PmeError::InvalidParameter(format!(
                "initial density must be positive at interior node {i}"
            )));
        }
        if let Some(i) = self.edges.iter().position(|v| !(*v > 0.0)) {
            return Err(PmeError::InvalidParameter(format!(
                "initial density must be positive at edge {i}"
            )));
        }
        Ok(())
    }

    /// `min_{0<i<M} f0(X_i)`.
    pub fn interior_min(&self) -> f64 {
        let m = self.nodes.len() - 1;
        self.nodes[1..m].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total mass `<f0, 1>` by the trapezoidal node product.
    pub fn mass(&self, grid: &StaggeredGrid) -> f64 {
        let ones = vec![1.0; self.nodes.len()];
        crate::grid::inner_node(&self.nodes, &ones, grid).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeCase {
    /// Nonlinear scheme from the `f ln f` energy, solved by damped Newton.
    Case1,
    /// Linear scheme from the `1/(2f)` energy.
    Case2,
}

impl SchemeCase {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Self::Case1),
            2 => Ok(Self::Case2),
            other => Err(PmeError::InvalidParameter(format!("unknown scheme case {other}"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Self::Case1 => 1,
            Self::Case2 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub case: SchemeCase,
    /// PME exponent, `m > 1`.
    pub m: f64,
    pub tau: f64,
    pub final_time: f64,
    /// Switch point between the `1/lambda` and the middle damping branch.
    pub lambda_prime: f64,
    /// Newton stop threshold; `None` selects `1e-12 * sqrt(M + 1)`.
    pub newton_tol: Option<f64>,
    pub newton_max_iter: usize,
}

impl SchemeConfig {
    pub const DEFAULT_LAMBDA_PRIME: f64 = 0.9;
    pub const DEFAULT_NEWTON_MAX_ITER: usize = 5000;

    pub fn new(case: SchemeCase, m: f64, tau: f64, final_time: f64) -> Result<Self> {
        let cfg = Self {
            case,
            m,
            tau,
            final_time,
            lambda_prime: Self::DEFAULT_LAMBDA_PRIME,
            newton_tol: None,
            newton_max_iter: Self::DEFAULT_NEWTON_MAX_ITER,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(PmeError::InvalidParameter(format!("m must exceed 1, got {}", self.m)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(PmeError::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.final_time >= 0.0) {
            return Err(PmeError::InvalidParameter(format!(
                "final time must be nonnegative, got {}",
                self.final_time
            )));
        }
        if !(self.lambda_prime >= LAMBDA_STAR && self.lambda_prime < 1.0) {
            return Err(PmeError::InvalidParameter(format!(
                "lambda' must lie in [2 - sqrt(3), 1), got {}",
                self.lambda_prime
            )));
        }
        if let Some(tol) = self.newton_tol {
            if !(tol > 0.0) {
                return Err(PmeError::InvalidParameter(format!("newton_tol must be positive, got {tol}")));
            }
        }
        if self.newton_max_iter == 0 {
            return Err(PmeError::InvalidParameter("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tol_for(&self, grid: &StaggeredGrid) -> f64 {
        self.newton_tol
            .unwrap_or_else(|| 1e-12 * (grid.node_count() as f64).sqrt())
    }

    /// Number of steps needed to reach `final_time`, rounding to the nearest whole step.
    pub fn steps(&self) -> usize {
        (self.final_time / self.tau).round() as usize
    }
}

/// True iff `x` is strictly increasing.
pub fn check_admissible(x: &[f64]) -> bool {
    first_inversion(x).is_none()
}

/// First index `i` with `x[i-1] >= x[i]`.
pub(crate) fn first_inversion(x: &[f64]) -> Option<usize> {
    x.windows(2).position(|w| !(w[0] < w[1])).map(|i| i + 1)
}

pub(crate) fn require_admissible(x: &[f64]) -> Result<()> {
    match first_inversion(x) {
        Some(node) => Err(PmeError::NotAdmissible { node }),
        None => Ok(()),
    }
}

/// Eulerian density on the moved particles, `f_i = f0(X_i) / (D~_h x)_i`.
pub fn density_from_trajectory(
    x: &[f64],
    f0: &InitialDensity,
    grid: &StaggeredGrid,
) -> Result<NodeField> {
    if x.len() != grid.node_count() {
        return Err(PmeError::LengthMismatch { expected: grid.node_count(), got: x.len() });
    }
    let dx = dtilde_unchecked(x, grid.h());
    dx.iter()
        .zip(f0.nodes.iter())
        .enumerate()
        .map(|(i, (&d, &f))| {
            if d > 0.0 {
                Ok(f / d)
            } else {
                Err(PmeError::NonpositiveGradient { node: i, value: d })
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(NodeField)
}
