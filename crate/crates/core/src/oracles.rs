//! Closed-form references and the canonical initial data.

use std::f64::consts::PI;

use crate::error::{PmeError, Result};
use crate::grid::StaggeredGrid;
use crate::trajectory::InitialDensity;

fn barenblatt_k(m: f64) -> f64 {
    1.0 / (m + 1.0)
}

/// Barenblatt profile
/// `(t+1)^{-k} (1 - k(m-1)/(2m) x^2 / (t+1)^{2k})_+^{1/(m-1)}` with `k = 1/(m+1)`.
pub fn barenblatt(x: f64, t: f64, m: f64) -> f64 {
    let k = barenblatt_k(m);
    let s = t + 1.0;
    let arg = 1.0 - k * (m - 1.0) / (2.0 * m) * x * x / s.powf(2.0 * k);
    if arg <= 0.0 {
        0.0
    } else {
        s.powf(-k) * arg.powf(1.0 / (m - 1.0))
    }
}

/// Right interface of the Barenblatt profile, `sqrt(2m / (k(m-1))) (t+1)^k`.
pub fn barenblatt_interface(t: f64, m: f64) -> f64 {
    let k = barenblatt_k(m);
    (2.0 * m / (k * (m - 1.0))).sqrt() * (t + 1.0).powf(k)
}

/// Lagrangian path of the particle labelled `X` in the Barenblatt flow: `X (t+1)^k`.
pub fn barenblatt_trajectory(label: f64, t: f64, m: f64) -> f64 {
    label * (t + 1.0).powf(barenblatt_k(m))
}

/// `1 / (2 (m+1) (1 - theta))` for the waiting-time family, `theta in [0, 1/4]`.
pub fn exact_waiting_time(m: f64, theta: f64) -> Result<f64> {
    if !(m > 1.0) {
        return Err(PmeError::InvalidParameter(format!("m must exceed 1, got {m}")));
    }
    check_theta(theta)?;
    Ok(1.0 / (2.0 * (m + 1.0) * (1.0 - theta)))
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=0.25).contains(&theta) {
        return Err(PmeError::InvalidParameter(format!("theta must lie in [0, 1/4], got {theta}")));
    }
    Ok(())
}

/// `sin(pi x) + 0.5` on `(0, 1)`.
pub fn smooth_profile(x: f64) -> f64 {
    (PI * x).sin() + 0.5
}

/// `f0^{m-1} = (m-1)/m ((1-theta) sin^2 x + theta sin^4 x)` on `[-pi, 0]`.
pub fn waiting_profile_pow(x: f64, m: f64, theta: f64) -> f64 {
    if !(-PI..=0.0).contains(&x) {
        return 0.0;
    }
    let s2 = x.sin().powi(2);
    ((m - 1.0) / m * ((1.0 - theta) * s2 + theta * s2 * s2)).max(0.0)
}

pub fn waiting_profile(x: f64, m: f64, theta: f64) -> f64 {
    waiting_profile_pow(x, m, theta).powf(1.0 / (m - 1.0))
}

/// Two columns: 1.5 on `(-3, -0.5)`, 1 on `(0.5, 3)`, zero elsewhere.
pub fn two_column_profile(x: f64) -> f64 {
    if x > 0.5 && x < 3.0 {
        1.0
    } else if x > -3.0 && x < -0.5 {
        1.5
    } else {
        0.0
    }
}

/// The named initial states, with the grid each one is solved on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// Positive data on the fixed domain `(0, 1)`.
    Smooth,
    /// Barenblatt profile at `t = 0`, solved on its support.
    Barenblatt { m: f64 },
    /// Waiting-time family, solved on its support `[-pi, 0]`.
    Waiting { m: f64, theta: f64 },
    /// Left column of the two-column data, support `[-3, -0.5]`.
    TwoColumnLeft,
    /// Right column, support `[0.5, 3]`.
    TwoColumnRight,
}

impl InitialData {
    pub fn by_name(name: &str, m: f64, theta: f64) -> Result<Self> {
        match name {
            "smooth" | "ini1" => Ok(Self::Smooth),
            "barenblatt" => Ok(Self::Barenblatt { m }),
            "waiting" | "wt" => {
                check_theta(theta)?;
                Ok(Self::Waiting { m, theta })
            }
            "two_column_left" => Ok(Self::TwoColumnLeft),
            "two_column_right" => Ok(Self::TwoColumnRight),
            other => Err(PmeError::InvalidParameter(format!("unknown initial data '{other}'"))),
        }
    }

    /// Reference interval the trajectories start from.
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            Self::Smooth => (0.0, 1.0),
            Self::Barenblatt { m } => {
                let xi = barenblatt_interface(0.0, m);
                (-xi, xi)
            }
            Self::Waiting { .. } => (-PI, 0.0),
            Self::TwoColumnLeft => (-3.0, -0.5),
            Self::TwoColumnRight => (0.5, 3.0),
        }
    }

    pub fn has_free_boundary(&self) -> bool {
        !matches!(self, Self::Smooth)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Smooth => smooth_profile(x),
            Self::Barenblatt { m } => barenblatt(x, 0.0, m),
            Self::Waiting { m, theta } => waiting_profile(x, m, theta),
            Self::TwoColumnLeft | Self::TwoColumnRight => two_column_profile(x),
        }
    }

    pub fn grid(&self, cells: usize) -> Result<StaggeredGrid> {
        let (a, b) = self.interval();
        StaggeredGrid::over(a, b, cells)
    }

    pub fn sample(&self, grid: &StaggeredGrid) -> Result<InitialDensity> {
        if self.has_free_boundary() {
            InitialDensity::sample_support(grid, |x| self.eval(x))
        } else {
            InitialDensity::sample(grid, |x| self.eval(x))
        }
    }
}

/// Samples the named data on `cells` cells of its natural interval.
pub fn initial_data(data: InitialData, cells: usize) -> Result<(StaggeredGrid, InitialDensity)> {
    let grid = data.grid(cells)?;
    let f0 = data.sample(&grid)?;
    Ok((grid, f0))
}
