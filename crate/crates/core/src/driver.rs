//! Time stepping shared by every problem kind, with per-step monitoring.

use std::time::Instant;

use crate::case1::{discrete_energy_e1, step_case1_from};
use crate::case2::{discrete_energy_e2, step_case2};
use crate::energy::{energy_balance, EnergyBalance};
use crate::error::{PmeError, Result};
use crate::free_boundary::step_free_boundary_from;
use crate::grid::StaggeredGrid;
use crate::newton::NewtonReport;
use crate::oracles::InitialData;
use crate::record::{SimulationRecord, Snapshot, SnapshotPolicy, StepStats};
use crate::trajectory::{density_from_trajectory, InitialDensity, SchemeCase, SchemeConfig, TrajectoryState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Endpoints pinned to the domain boundary.
    Fixed,
    /// Endpoints are interfaces moved by their own equations.
    Free,
}

/// A reference grid, its initial density and the scheme that evolves it.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: StaggeredGrid,
    pub f0: InitialDensity,
    pub cfg: SchemeConfig,
    pub boundary: BoundaryKind,
}

impl Problem {
    pub fn fixed(grid: StaggeredGrid, f0: InitialDensity, cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        f0.require_positive_interior()?;
        Ok(Self { grid, f0, cfg, boundary: BoundaryKind::Fixed })
    }

    /// Compactly supported data: `f0` vanishes at both ends and is positive inside.
    pub fn support(grid: StaggeredGrid, f0: InitialDensity, cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let m = grid.cells();
        if f0.nodes[0] != 0.0 || f0.nodes[m] != 0.0 {
            return Err(PmeError::InvalidParameter(
                "support problems need f0 = 0 at both interfaces".into(),
            ));
        }
        f0.require_positive_interior()?;
        Ok(Self { grid, f0, cfg, boundary: BoundaryKind::Free })
    }

    pub fn from_data(data: InitialData, cells: usize, cfg: SchemeConfig) -> Result<Self> {
        let grid = data.grid(cells)?;
        let f0 = data.sample(&grid)?;
        if data.has_free_boundary() {
            Self::support(grid, f0, cfg)
        } else {
            Self::fixed(grid, f0, cfg)
        }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        let mut p = self.clone();
        p.cfg.tau = tau;
        p
    }

    pub fn initial_state(&self) -> TrajectoryState {
        TrajectoryState::initial(&self.grid)
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: TrajectoryState,
    pub newton: Option<NewtonReport>,
    pub energy: EnergyBalance,
    pub seconds: f64,
}

/// One step. `pinned[k]` holds the left (`k = 0`) or right (`k = 1`) endpoint in place;
/// fixed-boundary problems always pin both.
pub fn advance(problem: &Problem, state: &TrajectoryState, pinned: [bool; 2]) -> Result<StepOutcome> {
    advance_from(problem, state, None, pinned)
}

/// [`advance`] with the nonlinear solve started from `guess` (ignored if inadmissible).
/// The update is the same up to the Newton tolerance; only the iteration count changes.
pub fn advance_from(
    problem: &Problem,
    state: &TrajectoryState,
    guess: Option<&[f64]>,
    pinned: [bool; 2],
) -> Result<StepOutcome> {
    let (grid, f0, cfg) = (&problem.grid, &problem.f0, &problem.cfg);
    let pinned = match problem.boundary {
        BoundaryKind::Fixed => [true, true],
        BoundaryKind::Free => pinned,
    };
    let start = Instant::now();
    let (next, newton) = if pinned == [true, true] {
        match cfg.case {
            SchemeCase::Case1 => {
                let (s, r) = step_case1_from(state, guess, f0, grid, cfg)?;
                (s, Some(r))
            }
            SchemeCase::Case2 => (step_case2(state, f0, grid, cfg)?, None),
        }
    } else {
        let (s, r) = step_free_boundary_from(state, guess, problem, pinned)?;
        (s, Some(r))
    };
    let seconds = start.elapsed().as_secs_f64();
    let energy = energy_balance(&state.x, &next.x, f0, grid, cfg)?;
    Ok(StepOutcome { state: next, newton, energy, seconds })
}

pub fn snapshot(problem: &Problem, state: &TrajectoryState) -> Result<Snapshot> {
    let f = density_from_trajectory(&state.x, &problem.f0, &problem.grid)?;
    Ok(Snapshot {
        n: state.n,
        t: state.t,
        labels: problem.grid.nodes().into_inner(),
        x: state.x.to_vec(),
        f: f.into_inner(),
        e1: discrete_energy_e1(&state.x, &problem.f0, &problem.grid),
        e2: discrete_energy_e2(&state.x, &problem.f0, &problem.grid),
    })
}

/// Accumulates a [`SimulationRecord`] as steps are taken.
pub struct Recorder {
    pub policy: SnapshotPolicy,
    pub record: SimulationRecord,
    last_snapshot_n: Option<usize>,
}

impl Recorder {
    pub fn new(policy: SnapshotPolicy) -> Self {
        Self { policy, record: SimulationRecord::default(), last_snapshot_n: None }
    }

    pub fn start(&mut self, problem: &Problem, state: &TrajectoryState) -> Result<()> {
        self.push_snapshot(problem, state)
    }

    fn push_snapshot(&mut self, problem: &Problem, state: &TrajectoryState) -> Result<()> {
        if self.last_snapshot_n == Some(state.n) {
            return Ok(());
        }
        self.record.snapshots.push(snapshot(problem, state)?);
        self.last_snapshot_n = Some(state.n);
        Ok(())
    }

    pub fn push_step(&mut self, problem: &Problem, outcome: &StepOutcome, pinned: [bool; 2]) -> Result<()> {
        let s = &outcome.state;
        self.record.stepping_seconds += outcome.seconds;
        self.record.steps.push(StepStats {
            n: s.n,
            t: s.t,
            e1: discrete_energy_e1(&s.x, &problem.f0, &problem.grid),
            e2: discrete_energy_e2(&s.x, &problem.f0, &problem.grid),
            xi_left: s.left(),
            xi_right: s.right(),
            newton: outcome.newton,
            energy_margin: outcome.energy.margin(),
            pinned,
        });
        if self.policy.wants(s.n, s.t, problem.cfg.tau) {
            self.push_snapshot(problem, s)?;
        }
        Ok(())
    }

    pub fn finish(mut self, problem: &Problem, state: &TrajectoryState) -> Result<SimulationRecord> {
        self.push_snapshot(problem, state)?;
        Ok(self.record)
    }
}

/// Length of the next step toward `t_end`, or `None` once it is reached.
pub(crate) fn next_tau(t: f64, t_end: f64, tau: f64) -> Option<f64> {
    let remaining = t_end - t;
    if remaining <= 1e-9 * tau {
        None
    } else if remaining < tau * (1.0 - 1e-9) {
        Some(remaining)
    } else {
        Some(tau)
    }
}

/// Step times kept as `origin + k tau` so thousands of steps land on `t_end`
/// without the drift of a running sum.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Clock {
    origin: f64,
    tau: f64,
    steps: usize,
}

impl Clock {
    pub(crate) fn new(origin: f64, tau: f64) -> Self {
        Self { origin, tau, steps: 0 }
    }

    pub(crate) fn now(&self) -> f64 {
        self.origin + self.steps as f64 * self.tau
    }

    pub(crate) fn next(&self, t_end: f64) -> Option<f64> {
        next_tau(self.now(), t_end, self.tau)
    }

    /// Time after a step of length `step`; an irregular step restarts the count.
    pub(crate) fn advance(&mut self, step: f64) -> f64 {
        if step == self.tau {
            self.steps += 1;
        } else {
            self.origin = self.now() + step;
            self.steps = 0;
        }
        self.now()
    }
}

/// Linear extrapolation of the last two levels to a step of length `tau`.
pub(crate) fn extrapolate(prev: Option<&TrajectoryState>, cur: &TrajectoryState, tau: f64) -> Option<Vec<f64>> {
    let prev = prev?;
    let dt = cur.t - prev.t;
    if !(dt > 0.0) || prev.x.len() != cur.x.len() {
        return None;
    }
    let r = tau / dt;
    Some(cur.x.iter().zip(prev.x.iter()).map(|(c, p)| c + r * (c - p)).collect())
}

/// Steps `state` up to `t_end` with both interfaces free (or pinned, for fixed problems).
pub fn evolve_until(
    problem: &Problem,
    mut state: TrajectoryState,
    t_end: f64,
    recorder: &mut Recorder,
) -> Result<TrajectoryState> {
    let short = |tau: f64| (tau != problem.cfg.tau).then(|| problem.with_tau(tau));
    let mut prev: Option<TrajectoryState> = None;
    let mut clock = Clock::new(state.t, problem.cfg.tau);
    while let Some(tau) = clock.next(t_end) {
        let shortened = short(tau);
        let p = shortened.as_ref().unwrap_or(problem);
        let guess = extrapolate(prev.as_ref(), &state, tau);
        let mut outcome = advance_from(p, &state, guess.as_deref(), [false, false])?;
        outcome.state.t = clock.advance(tau);
        recorder.push_step(p, &outcome, [false, false])?;
        prev = Some(std::mem::replace(&mut state, outcome.state));
    }
    Ok(state)
}

/// Runs a problem from `t = 0` to its configured final time.
pub fn simulate(problem: &Problem, policy: SnapshotPolicy) -> Result<(TrajectoryState, SimulationRecord)> {
    let state = problem.initial_state();
    let mut recorder = Recorder::new(policy);
    recorder.start(problem, &state)?;
    let end = evolve_until(problem, state, problem.cfg.final_time, &mut recorder)?;
    let record = recorder.finish(problem, &end)?;
    Ok((end, record))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_length_schedule() {
        assert_eq!(next_tau(0.0, 0.05, 0.01), Some(0.01));
        assert_eq!(next_tau(0.05, 0.05, 0.01), None);
        let r = next_tau(0.045, 0.05, 0.01).unwrap();
        assert!((r - 0.005).abs() < 1e-15);
        assert_eq!(next_tau(0.0, 0.0, 0.01), None);
    }

    #[test]
    fn clock_takes_exactly_the_whole_steps() {
        let tau = 1.0 / 409_600.0;
        let mut clock = Clock::new(0.0, tau);
        let mut steps = 0;
        while let Some(step) = clock.next(0.05) {
            clock.advance(step);
            steps += 1;
        }
        assert_eq!(steps, 20_480);
        let mut clock = Clock::new(0.0, 0.01);
        clock.advance(0.004);
        assert_eq!(clock.next(0.05), Some(0.01));
        clock.advance(0.01);
        assert!((clock.now() - 0.014).abs() < 1e-15);
    }

    #[test]
    fn zero_length_run_keeps_only_the_initial_state() {
        let cfg = SchemeConfig::new(SchemeCase::Case2, 2.0, 0.01, 0.0).unwrap();
        let p = Problem::from_data(InitialData::Smooth, 20, cfg).unwrap();
        let (end, record) = simulate(&p, SnapshotPolicy::default()).unwrap();
        assert_eq!(end.n, 0);
        assert!(record.steps.is_empty());
        assert_eq!(record.snapshots.len(), 1);
    }
}
