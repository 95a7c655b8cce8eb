//! What a run leaves behind: per-step scalars, node snapshots, solver statistics.

use crate::newton::NewtonReport;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    /// Reference labels `X_i`.
    pub labels: Vec<f64>,
    /// Particle positions `x_i`.
    pub x: Vec<f64>,
    /// Recovered density `f_i`.
    pub f: Vec<f64>,
    pub e1: f64,
    pub e2: f64,
}

impl Snapshot {
    pub fn xi_left(&self) -> f64 {
        self.x[0]
    }

    pub fn xi_right(&self) -> f64 {
        self.x[self.x.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub n: usize,
    pub t: f64,
    pub e1: f64,
    pub e2: f64,
    pub xi_left: f64,
    pub xi_right: f64,
    /// `None` for the linear fixed-boundary solve.
    pub newton: Option<NewtonReport>,
    /// Distance inside the discrete energy inequality; negative means violated.
    pub energy_margin: f64,
    pub pinned: [bool; 2],
}

/// When to keep full node snapshots. The initial and final states are always kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotPolicy {
    /// Keep every `every`-th step; zero disables.
    pub every: usize,
    /// Keep the step closest to each of these times.
    pub times: Vec<f64>,
}

impl SnapshotPolicy {
    pub fn wants(&self, n: usize, t: f64, tau: f64) -> bool {
        (self.every > 0 && n.is_multiple_of(self.every))
            || self.times.iter().any(|&s| (t - s).abs() <= 0.5 * tau + 1e-12 * s.abs().max(1.0))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationRecord {
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepStats>,
    /// Wall-clock seconds spent inside the step solves only.
    pub stepping_seconds: f64,
    /// `(t, |B_2h / B_h|)` at the left interface while it was pinned.
    pub ratio_history: Vec<(f64, f64)>,
    pub waiting_time: Option<f64>,
    pub meeting_time: Option<f64>,
}

impl SimulationRecord {
    pub fn min_energy_margin(&self) -> f64 {
        self.steps.iter().map(|s| s.energy_margin).fold(f64::INFINITY, f64::min)
    }

    pub fn max_newton_iterations(&self) -> usize {
        self.steps.iter().filter_map(|s| s.newton.map(|r| r.iterations)).max().unwrap_or(0)
    }

    pub fn total_newton_iterations(&self) -> usize {
        self.steps.iter().filter_map(|s| s.newton.map(|r| r.iterations)).sum()
    }

    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Appends another record's history, e.g. the phase after a merge.
    pub fn extend(&mut self, other: SimulationRecord) {
        self.snapshots.extend(other.snapshots);
        self.steps.extend(other.steps);
        self.stepping_seconds += other.stepping_seconds;
        self.ratio_history.extend(other.ratio_history);
        self.waiting_time = self.waiting_time.or(other.waiting_time);
        self.meeting_time = self.meeting_time.or(other.meeting_time);
    }
}
