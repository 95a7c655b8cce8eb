//! Lagrangian trajectory schemes for the 1-D porous medium equation `f_t = (f^m)_xx`.
//!
//! The density is transported by a flow map `x(X, t)` so that `f(x(X, t), t) x_X = f0(X)`.
//! Two fully discrete schemes evolve `x` on a staggered reference grid:
//! [`case1`] solves a strictly convex minimization per step by damped Newton,
//! [`case2`] is linear with an M-matrix. Compactly supported data carries its
//! interfaces along as the end particles ([`free_boundary`]).

pub mod case1;
pub mod case2;
pub mod driver;
pub mod energy;
pub mod error;
pub mod free_boundary;
pub mod grid;
pub mod harness;
pub mod newton;
pub mod oracles;
pub mod pchip;
pub mod record;
pub mod trajectory;
pub mod tridiag;

pub use driver::{advance, simulate, BoundaryKind, Problem};
pub use error::{PmeError, Result};
pub use grid::{EdgeField, NodeField, StaggeredGrid};
pub use oracles::InitialData;
pub use record::{SimulationRecord, Snapshot, SnapshotPolicy};
pub use trajectory::{InitialDensity, SchemeCase, SchemeConfig, TrajectoryState};
