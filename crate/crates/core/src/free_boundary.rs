//! Compactly supported data: interface equations, waiting times and merging supports.
//!
//! The endpoints `x_0`, `x_M` of the trajectory are the interfaces. Each one obeys
//! `(D-bar x^n)^(m-1) (x^{n+1} - x^n) / tau + m/(m-1) D-bar[f0^(m-1)] / D-bar x^{n+1} = 0`,
//! solved together with the interior rows of the chosen case.

use crate::case1;
use crate::case2;
use crate::driver::{advance_from, evolve_until, extrapolate, snapshot, BoundaryKind, Clock, Problem, Recorder, StepOutcome};
use crate::error::{PmeError, Result};
use crate::grid::{NodeField, StaggeredGrid};
use crate::newton::{self, Damping, NewtonReport, NewtonSettings};
use crate::pchip::Pchip;
use crate::record::{SimulationRecord, Snapshot, SnapshotPolicy, StepStats};
use crate::trajectory::{
    density_from_trajectory, require_admissible, InitialDensity, SchemeCase, SchemeConfig, TrajectoryState,
};
use crate::tridiag::Tridiagonal;

/// A problem whose reference grid is the initial support.
pub type SupportProblem = Problem;

/// Two supports count as touching once their gap is this small.
pub const MEETING_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

/// Residual of one interface equation with its derivatives in the interface node
/// and in its neighbour.
fn boundary_row(side: Side, x: &[f64], x_old: &[f64], f0: &[f64], h: f64, cfg: &SchemeConfig) -> Result<(f64, f64, f64)> {
    let m = cfg.m;
    let last = x.len() - 1;
    let (i, j) = match side {
        Side::Left => (0, 1),
        Side::Right => (last, last - 1),
    };
    // both differences taken inward-positive: gap = |x_j - x_i|
    let sign = if side == Side::Left { 1.0 } else { -1.0 };
    let gap_old = sign * (x_old[j] - x_old[i]);
    let gap = sign * (x[j] - x[i]);
    if !(gap > 0.0) {
        return Err(PmeError::NotAdmissible { node: i.max(j) });
    }
    let b = (gap_old / h).powf(m - 1.0);
    // k = m/(m-1) D-bar[f0^(m-1)] in the outward-positive orientation of the end
    let k = sign * m / (m - 1.0) * (f0[j].powf(m - 1.0) - f0[i].powf(m - 1.0)) / h;
    let r = b * (x[i] - x_old[i]) / cfg.tau + k * h / gap;
    let d_self = b / cfg.tau + sign * k * h / (gap * gap);
    let d_nb = -sign * k * h / (gap * gap);
    Ok((r, d_self, d_nb))
}

/// The two interface residuals `(F_0, F_M)` at a candidate update.
pub fn boundary_residuals(
    x_new: &[f64],
    x_old: &[f64],
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
) -> Result<(f64, f64)> {
    let n = grid.node_count();
    for x in [x_new, x_old] {
        if x.len() != n {
            return Err(PmeError::LengthMismatch { expected: n, got: x.len() });
        }
    }
    let (l, _, _) = boundary_row(Side::Left, x_new, x_old, &f0.nodes, grid.h(), cfg)?;
    let (r, _, _) = boundary_row(Side::Right, x_new, x_old, &f0.nodes, grid.h(), cfg)?;
    Ok((l, r))
}

/// Full system over all `M + 1` nodes; a pinned end gets the row `x_i - x_i^n = 0`.
fn assemble(
    x: &[f64],
    x_old: &[f64],
    coef: &[f64],
    problem: &Problem,
    pinned: [bool; 2],
) -> Result<(Tridiagonal, Vec<f64>)> {
    let (grid, f0, cfg) = (&problem.grid, &problem.f0, &problem.cfg);
    let n = x.len();
    let h = grid.h();
    let mut jac = Tridiagonal::zeros(n);
    let mut r = vec![0.0; n];
    match cfg.case {
        SchemeCase::Case1 => case1::fill_interior(x, x_old, coef, &f0.edges, h, cfg.tau, 0, &mut jac, &mut r)?,
        SchemeCase::Case2 => {
            require_admissible(x)?;
            case2::fill_interior(x, x_old, coef, &f0.edges, h, cfg.tau, 0, &mut jac, &mut r)
        }
    }
    for side in [Side::Left, Side::Right] {
        let (i, nb) = match side {
            Side::Left => (0, 1),
            Side::Right => (n - 1, n - 2),
        };
        if pinned[side.index()] {
            jac.diag[i] = 1.0;
            r[i] = x[i] - x_old[i];
            continue;
        }
        let (ri, d_self, d_nb) = boundary_row(side, x, x_old, &f0.nodes, h, cfg)?;
        r[i] = ri;
        jac.diag[i] = d_self;
        if nb > i {
            jac.upper[i] = d_nb;
        } else {
            jac.lower[i] = d_nb;
        }
    }
    Ok((jac, r))
}

/// One step of the coupled interior + interface system.
///
/// `pinned[0]` / `pinned[1]` hold the left / right interface in place. Case 1 uses
/// the decrement-damped Newton of the interior scheme; Case 2 uses plain Newton
/// steps, checking the M-matrix sign pattern at every assembly.
pub fn step_free_boundary(
    state: &TrajectoryState,
    problem: &Problem,
    pinned: [bool; 2],
) -> Result<(TrajectoryState, NewtonReport)> {
    step_free_boundary_from(state, None, problem, pinned)
}

/// [`step_free_boundary`] with Newton started from `guess` when it is admissible.
pub(crate) fn step_free_boundary_from(
    state: &TrajectoryState,
    guess: Option<&[f64]>,
    problem: &Problem,
    pinned: [bool; 2],
) -> Result<(TrajectoryState, NewtonReport)> {
    let (grid, f0, cfg) = (&problem.grid, &problem.f0, &problem.cfg);
    let x_old = &state.x;
    if x_old.len() != grid.node_count() {
        return Err(PmeError::LengthMismatch { expected: grid.node_count(), got: x_old.len() });
    }
    require_admissible(x_old)?;
    f0.require_positive_interior()?;
    let (coef, damping) = match cfg.case {
        SchemeCase::Case1 => (
            case1::mass_coefficients(x_old, f0, grid, cfg.m)?,
            Damping::Decrement { h_over_a: 1.0 / f0.interior_min(), lambda_prime: cfg.lambda_prime },
        ),
        SchemeCase::Case2 => (case2::mass_coefficients(x_old, f0, grid, cfg.m)?, Damping::Full),
    };
    let settings = NewtonSettings { tol: cfg.tol_for(grid), max_iter: cfg.newton_max_iter, damping };
    let check_m_matrix = cfg.case == SchemeCase::Case2;
    let start = newton::starting_point(x_old, guess, pinned);
    let (x, report) = newton::solve(start, 0, &settings, |x| {
        let (jac, r) = assemble(x, x_old, &coef, problem, pinned)?;
        if check_m_matrix {
            if let Some(row) = jac.m_matrix_violation() {
                return Err(PmeError::NotMMatrix { row });
            }
        }
        Ok((jac, r))
    })?;
    require_admissible(&x)?;
    Ok((TrajectoryState { x: NodeField(x), n: state.n + 1, t: state.t + cfg.tau }, report))
}

/// `B = D-bar[f0^(m-1)] / (D-bar x)^m` at the left interface, with differences
/// over `stride` cells taken from the given nodes.
pub fn waiting_ratio(x: &[f64], f0: &InitialDensity, grid: &StaggeredGrid, cfg: &SchemeConfig, stride: usize) -> Result<f64> {
    waiting_ratio_at(x, f0, grid, cfg, stride, Side::Left)
}

/// [`waiting_ratio`] at either interface, oriented so that an expanding front gives `B > 0`.
pub fn waiting_ratio_at(
    x: &[f64],
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
    stride: usize,
    side: Side,
) -> Result<f64> {
    let cells = grid.cells();
    if x.len() != grid.node_count() {
        return Err(PmeError::LengthMismatch { expected: grid.node_count(), got: x.len() });
    }
    if stride == 0 || stride > cells {
        return Err(PmeError::InvalidGrid(format!("stride {stride} needs at least that many cells, M = {cells}")));
    }
    let (i, j) = match side {
        Side::Left => (0, stride),
        Side::Right => (cells, cells - stride),
    };
    let sh = stride as f64 * grid.h();
    let m = cfg.m;
    let df = (f0.nodes[j].powf(m - 1.0) - f0.nodes[i].powf(m - 1.0)) / sh;
    let dx = (x[j] - x[i]).abs() / sh;
    if !(dx > 0.0) {
        return Err(PmeError::NotAdmissible { node: i.max(j) });
    }
    Ok(df / dx.powf(m))
}

/// Waiting-time bookkeeping for one interface.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingState {
    pub side: Side,
    pub waiting: bool,
    pub t_star_h: Option<f64>,
    /// Step index at which the criterion fired.
    pub n_star: Option<usize>,
    /// `(t, |B_2h / B_h|)`; infinite where `B_h = 0`.
    pub ratio_history: Vec<(f64, f64)>,
}

impl WaitingState {
    pub fn new(side: Side) -> Self {
        Self { side, waiting: true, t_star_h: None, n_star: None, ratio_history: Vec::new() }
    }
}

/// Evaluates the criterion `|B_2h / B_h| <= 1` on the time level held in `x`.
pub fn detect_waiting_end(
    mut state: WaitingState,
    x: &TrajectoryState,
    f0: &InitialDensity,
    grid: &StaggeredGrid,
    cfg: &SchemeConfig,
) -> Result<WaitingState> {
    if !state.waiting {
        return Ok(state);
    }
    let b_h = waiting_ratio_at(&x.x, f0, grid, cfg, 1, state.side)?;
    let b_2h = waiting_ratio_at(&x.x, f0, grid, cfg, 2, state.side)?;
    if b_h == 0.0 {
        state.ratio_history.push((x.t, f64::INFINITY));
        return Ok(state);
    }
    let ratio = (b_2h / b_h).abs();
    state.ratio_history.push((x.t, ratio));
    if ratio <= 1.0 {
        state.waiting = false;
        state.t_star_h = Some(x.t);
        state.n_star = Some(x.n);
    }
    Ok(state)
}

#[derive(Debug, Clone)]
pub struct WaitingOutcome {
    pub left: WaitingState,
    pub right: WaitingState,
    pub final_state: TrajectoryState,
    pub record: SimulationRecord,
}

impl WaitingOutcome {
    /// Detected waiting time at the left interface.
    pub fn t_star_h(&self) -> Option<f64> {
        self.left.t_star_h
    }
}

/// Two-phase run: each interface stays pinned until its own criterion fires,
/// then moves by its interface equation.
pub fn run_waiting_time(problem: &Problem, policy: SnapshotPolicy) -> Result<WaitingOutcome> {
    if problem.boundary != BoundaryKind::Free {
        return Err(PmeError::InvalidParameter("waiting-time runs need compactly supported data".into()));
    }
    if problem.grid.cells() < 2 {
        return Err(PmeError::InvalidGrid("waiting-time detection needs M >= 2".into()));
    }
    let (grid, f0, cfg) = (&problem.grid, &problem.f0, &problem.cfg);
    let mut state = problem.initial_state();
    let mut recorder = Recorder::new(policy);
    recorder.start(problem, &state)?;
    let mut sides = [WaitingState::new(Side::Left), WaitingState::new(Side::Right)];
    for s in sides.iter_mut() {
        *s = detect_waiting_end(s.clone(), &state, f0, grid, cfg)?;
    }
    let mut prev: Option<TrajectoryState> = None;
    let mut clock = Clock::new(state.t, cfg.tau);
    while let Some(tau) = clock.next(cfg.final_time) {
        let short = (tau != cfg.tau).then(|| problem.with_tau(tau));
        let p = short.as_ref().unwrap_or(problem);
        let pinned = [sides[0].waiting, sides[1].waiting];
        let guess = extrapolate(prev.as_ref(), &state, tau);
        let mut outcome = advance_from(p, &state, guess.as_deref(), pinned)?;
        outcome.state.t = clock.advance(tau);
        recorder.push_step(p, &outcome, pinned)?;
        prev = Some(std::mem::replace(&mut state, outcome.state));
        for s in sides.iter_mut() {
            *s = detect_waiting_end(s.clone(), &state, f0, grid, cfg)?;
        }
    }
    let mut record = recorder.finish(problem, &state)?;
    let [left, right] = sides;
    record.ratio_history = left.ratio_history.clone();
    record.waiting_time = left.t_star_h;
    Ok(WaitingOutcome { left, right, final_state: state, record })
}

/// Whether the right interface of `left` has reached the left interface of `right`.
pub fn detect_meeting(left: &TrajectoryState, right: &TrajectoryState) -> Result<bool> {
    let gap = right.left() - left.right();
    if gap < -MEETING_GAP {
        return Err(PmeError::SupportOverlap { overlap: -gap });
    }
    Ok(gap <= MEETING_GAP)
}

/// Rebuilds one support problem from two touching ones by monotone cubic
/// interpolation on `cells` equal cells spanning both supports.
///
/// The two touching interface nodes are replaced by one junction node at their
/// midpoint whose density is the mean of the adjacent interior densities.
pub fn reconstruct_merged(
    left: (&TrajectoryState, &[f64]),
    right: (&TrajectoryState, &[f64]),
    cells: usize,
    cfg: &SchemeConfig,
) -> Result<Problem> {
    let (ls, lf) = left;
    let (rs, rf) = right;
    for (x, f) in [(&ls.x, lf), (&rs.x, rf)] {
        if x.len() != f.len() {
            return Err(PmeError::LengthMismatch { expected: x.len(), got: f.len() });
        }
        if x.len() < 3 {
            return Err(PmeError::InvalidGrid("each support needs at least two cells".into()));
        }
    }
    let ml = ls.x.len() - 1;
    let mut xs = Vec::with_capacity(ls.x.len() + rs.x.len() - 1);
    let mut fs = Vec::with_capacity(xs.capacity());
    xs.extend_from_slice(&ls.x[..ml]);
    fs.extend_from_slice(&lf[..ml]);
    xs.push(0.5 * (ls.x[ml] + rs.x[0]));
    fs.push(0.5 * (lf[ml - 1] + rf[1]));
    xs.extend_from_slice(&rs.x[1..]);
    fs.extend_from_slice(&rf[1..]);
    let a = xs[0];
    let b = *xs.last().expect("nonempty");
    let interp = Pchip::new(xs, fs)?;
    let grid = StaggeredGrid::over(a, b, cells)?;
    let mut nodes: NodeField = (0..grid.node_count()).map(|i| interp.eval(grid.node(i))).collect();
    nodes[0] = 0.0;
    nodes[cells] = 0.0;
    let f0 = InitialDensity::from_nodes(&grid, nodes, Some((a, b)))?;
    Problem::support(grid, f0, cfg.clone())
}

/// Result of evolving two supports until they merge and then the merged support.
#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub meeting_time: Option<f64>,
    /// The two supports at the meeting time (or at the end if they never met).
    pub left_at_meeting: TrajectoryState,
    pub right_at_meeting: TrajectoryState,
    pub premerge_mass: f64,
    pub merged: Option<Problem>,
    pub final_state: TrajectoryState,
    /// Pre-merge entries concatenate the two supports, left first.
    pub record: SimulationRecord,
}

fn combined_snapshot(l: &Problem, ls: &TrajectoryState, r: &Problem, rs: &TrajectoryState) -> Result<Snapshot> {
    let mut a = snapshot(l, ls)?;
    let b = snapshot(r, rs)?;
    a.labels.extend(b.labels);
    a.x.extend(b.x);
    a.f.extend(b.f);
    a.e1 += b.e1;
    a.e2 += b.e2;
    Ok(a)
}

fn combined_stats(l: &Problem, lo: &StepOutcome, r: &Problem, ro: &StepOutcome) -> StepStats {
    let newton = match (lo.newton, ro.newton) {
        (Some(a), Some(b)) => Some(if a.iterations >= b.iterations { a } else { b }),
        (a, b) => a.or(b),
    };
    StepStats {
        n: lo.state.n,
        t: lo.state.t,
        e1: case1::discrete_energy_e1(&lo.state.x, &l.f0, &l.grid)
            + case1::discrete_energy_e1(&ro.state.x, &r.f0, &r.grid),
        e2: case2::discrete_energy_e2(&lo.state.x, &l.f0, &l.grid)
            + case2::discrete_energy_e2(&ro.state.x, &r.f0, &r.grid),
        xi_left: lo.state.left(),
        xi_right: ro.state.right(),
        newton,
        energy_margin: lo.energy.margin().min(ro.energy.margin()),
        pinned: [false, false],
    }
}

/// Steps both supports by `tau`, in parallel, each warm-started from its previous level.
fn step_pair(
    l: &Problem,
    ls: &TrajectoryState,
    l_prev: Option<&TrajectoryState>,
    r: &Problem,
    rs: &TrajectoryState,
    r_prev: Option<&TrajectoryState>,
    tau: f64,
) -> Result<(StepOutcome, StepOutcome)> {
    let lp = l.with_tau(tau);
    let rp = r.with_tau(tau);
    let (a, b) = rayon::join(
        || advance_from(&lp, ls, extrapolate(l_prev, ls, tau).as_deref(), [false, false]),
        || advance_from(&rp, rs, extrapolate(r_prev, rs, tau).as_deref(), [false, false]),
    );
    Ok((a?, b?))
}

fn mass_of(problem: &Problem, state: &TrajectoryState) -> Result<f64> {
    let f = density_from_trajectory(&state.x, &problem.f0, &problem.grid)?;
    Ok(trapezoid(&state.x, &f))
}

/// Trapezoidal integral of nodal values over nonuniform nodes.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2).zip(f.windows(2)).map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1])).sum()
}

/// Evolves two supports side by side (left below right) until they touch, merges
/// them onto `merged_cells` cells and continues to `final_time`.
///
/// A step that would make the supports overlap is replaced by a shorter one,
/// found by bisection, that closes the gap to within [`MEETING_GAP`].
pub fn run_two_supports(
    left: &Problem,
    right: &Problem,
    merged_cells: usize,
    final_time: f64,
    policy: SnapshotPolicy,
) -> Result<MergeOutcome> {
    if left.boundary != BoundaryKind::Free || right.boundary != BoundaryKind::Free {
        return Err(PmeError::InvalidParameter("merging needs two compactly supported problems".into()));
    }
    if left.cfg != right.cfg {
        return Err(PmeError::InvalidParameter("both supports must share one scheme configuration".into()));
    }
    let tau = left.cfg.tau;
    let mut ls = left.initial_state();
    let mut rs = right.initial_state();
    let mut record = SimulationRecord::default();
    record.snapshots.push(combined_snapshot(left, &ls, right, &rs)?);
    let mut met = detect_meeting(&ls, &rs)?;
    let (mut l_prev, mut r_prev): (Option<TrajectoryState>, Option<TrajectoryState>) = (None, None);
    let mut clock = Clock::new(ls.t, tau);
    while !met {
        let Some(step) = clock.next(final_time) else { break };
        let mut used = step;
        let (mut lo, mut ro) = step_pair(left, &ls, l_prev.as_ref(), right, &rs, r_prev.as_ref(), step)?;
        let mut gap = ro.state.left() - lo.state.right();
        let mut seconds = lo.seconds.max(ro.seconds);
        if gap < -MEETING_GAP {
            let (mut lo_t, mut hi_t) = (0.0, step);
            let mut found = false;
            for _ in 0..200 {
                let mid = 0.5 * (lo_t + hi_t);
                let (a, b) = step_pair(left, &ls, l_prev.as_ref(), right, &rs, r_prev.as_ref(), mid)?;
                seconds += a.seconds.max(b.seconds);
                gap = b.state.left() - a.state.right();
                (lo, ro) = (a, b);
                used = mid;
                if gap.abs() <= MEETING_GAP {
                    found = true;
                    break;
                }
                if gap > 0.0 {
                    lo_t = mid;
                } else {
                    hi_t = mid;
                }
            }
            if !found {
                return Err(PmeError::SupportOverlap { overlap: -gap });
            }
        }
        let t = clock.advance(used);
        lo.state.t = t;
        ro.state.t = t;
        record.stepping_seconds += seconds;
        record.steps.push(combined_stats(left, &lo, right, &ro));
        l_prev = Some(std::mem::replace(&mut ls, lo.state));
        r_prev = Some(std::mem::replace(&mut rs, ro.state));
        met = detect_meeting(&ls, &rs)?;
        if met || policy.wants(ls.n, ls.t, tau) {
            record.snapshots.push(combined_snapshot(left, &ls, right, &rs)?);
        }
    }
    let premerge_mass = mass_of(left, &ls)? + mass_of(right, &rs)?;
    if !met {
        if record.snapshots.last().map(|s| s.n) != Some(ls.n) {
            record.snapshots.push(combined_snapshot(left, &ls, right, &rs)?);
        }
        return Ok(MergeOutcome {
            meeting_time: None,
            final_state: ls.clone(),
            left_at_meeting: ls,
            right_at_meeting: rs,
            premerge_mass,
            merged: None,
            record,
        });
    }
    record.meeting_time = Some(ls.t);
    let lf = density_from_trajectory(&ls.x, &left.f0, &left.grid)?;
    let rf = density_from_trajectory(&rs.x, &right.f0, &right.grid)?;
    let mut merged = reconstruct_merged((&ls, &lf), (&rs, &rf), merged_cells, &left.cfg)?;
    merged.cfg.final_time = final_time;
    let start = TrajectoryState { x: merged.grid.nodes(), n: ls.n, t: ls.t };
    let mut recorder = Recorder::new(policy);
    recorder.start(&merged, &start)?;
    let end = evolve_until(&merged, start, final_time, &mut recorder)?;
    record.extend(recorder.finish(&merged, &end)?);
    Ok(MergeOutcome {
        meeting_time: Some(ls.t),
        left_at_meeting: ls,
        right_at_meeting: rs,
        premerge_mass,
        merged: Some(merged),
        final_state: end,
        record,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::EdgeField;
    use crate::oracles::InitialData;

    fn cfg(case: SchemeCase, m: f64, tau: f64) -> SchemeConfig {
        SchemeConfig::new(case, m, tau, 1.0).unwrap()
    }

    #[test]
    fn flat_end_is_stationary() {
        let c = cfg(SchemeCase::Case1, 3.0, 0.01);
        let p = Problem::from_data(InitialData::Waiting { m: 3.0, theta: 0.25 }, 40, c.clone()).unwrap();
        let x = p.grid.nodes();
        let mut f0 = p.f0.clone();
        // make the end differences of f0^(m-1) vanish exactly
        f0.nodes[1] = 0.0;
        f0.nodes[39] = 0.0;
        let (l, r) = boundary_residuals(&x, &x, &f0, &p.grid, &c).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
    }

    #[test]
    fn single_interface_matches_bisection() {
        // the left interface equation with its neighbour held fixed is a scalar root problem
        let g = StaggeredGrid::over(0.0, 1.0, 2).unwrap();
        let f0 = InitialDensity::from_parts(
            &g,
            NodeField(vec![0.0, 0.7, 0.0]),
            EdgeField(vec![0.4, 0.4]),
            Some((0.0, 1.0)),
        )
        .unwrap();
        let c = cfg(SchemeCase::Case1, 2.0, 0.05);
        let x_old = g.nodes();
        let f = |x0: f64| boundary_row(Side::Left, &[x0, 0.5, 1.0], &x_old, &f0.nodes, g.h(), &c).unwrap().0;
        let (mut lo, mut hi) = (-5.0, 0.49);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        // scalar Newton on the same row
        let mut x0 = 0.0;
        for _ in 0..100 {
            let (r, d, _) = boundary_row(Side::Left, &[x0, 0.5, 1.0], &x_old, &f0.nodes, g.h(), &c).unwrap();
            x0 -= r / d;
        }
        assert!((x0 - root).abs() < 1e-12, "{x0} vs {root}");
        assert!(root < 0.0);
    }

    #[test]
    fn boundary_derivatives_match_differences() {
        let c = cfg(SchemeCase::Case2, 5.0 / 3.0, 0.01);
        let p = Problem::from_data(InitialData::Barenblatt { m: c.m }, 10, c.clone()).unwrap();
        let x_old = p.grid.nodes();
        let mut x = x_old.clone();
        x[0] -= 0.01;
        x[10] += 0.02;
        for side in [Side::Left, Side::Right] {
            let (i, j) = if side == Side::Left { (0, 1) } else { (10, 9) };
            let (_, ds, dn) = boundary_row(side, &x, &x_old, &p.f0.nodes, p.grid.h(), &c).unwrap();
            let eps = 1e-7;
            let fd = |k: usize| {
                let mut a = x.clone();
                let mut b = x.clone();
                a[k] += eps;
                b[k] -= eps;
                let ra = boundary_row(side, &a, &x_old, &p.f0.nodes, p.grid.h(), &c).unwrap().0;
                let rb = boundary_row(side, &b, &x_old, &p.f0.nodes, p.grid.h(), &c).unwrap().0;
                (ra - rb) / (2.0 * eps)
            };
            assert!((fd(i) - ds).abs() < 1e-5 * ds.abs().max(1.0));
            assert!((fd(j) - dn).abs() < 1e-5 * dn.abs().max(1.0));
        }
    }

    #[test]
    fn barenblatt_interfaces_move_outward_symmetrically() {
        for case in [SchemeCase::Case1, SchemeCase::Case2] {
            let c = cfg(case, 2.0, 0.01);
            let p = Problem::from_data(InitialData::Barenblatt { m: 2.0 }, 40, c).unwrap();
            let s0 = p.initial_state();
            let (s1, report) = step_free_boundary(&s0, &p, [false, false]).unwrap();
            assert!(report.converged);
            assert!(s1.left() < s0.left());
            assert!(s1.right() > s0.right());
            assert!((s1.left() + s1.right()).abs() <= 1e-10);
        }
    }

    #[test]
    fn pinned_ends_stay_put() {
        let c = cfg(SchemeCase::Case2, 3.0, 0.01);
        let p = Problem::from_data(InitialData::Barenblatt { m: 3.0 }, 20, c).unwrap();
        let s0 = p.initial_state();
        let (s1, _) = step_free_boundary(&s0, &p, [true, false]).unwrap();
        assert_eq!(s1.left(), s0.left());
        assert!(s1.right() > s0.right());
    }

    #[test]
    fn waiting_ratio_taylor_checks() {
        let c = cfg(SchemeCase::Case1, 3.0, 0.01);
        // f0^(m-1) = (X - 0)^2 near the left end
        let g = StaggeredGrid::over(0.0, 1.0, 100).unwrap();
        let f0 = InitialDensity::sample_support(&g, |x| x * (1.0 - x)).unwrap();
        let x = g.nodes();
        let b1 = waiting_ratio(&x, &f0, &g, &c, 1).unwrap();
        let b2 = waiting_ratio(&x, &f0, &g, &c, 2).unwrap();
        assert!((b2 / b1 - 2.0).abs() < 0.05);
        // f0^(m-1) with nonzero end slope
        let f0 = InitialDensity::sample_support(&g, |x| (x * (1.0 - x)).sqrt()).unwrap();
        let b1 = waiting_ratio(&x, &f0, &g, &c, 1).unwrap();
        let b2 = waiting_ratio(&x, &f0, &g, &c, 2).unwrap();
        assert!((b2 / b1 - 1.0).abs() < 0.02);
        assert!((b1 - 1.0).abs() < 0.02);
        // only the end pair is read, so odd M works at stride 2
        let odd = StaggeredGrid::over(0.0, 1.0, 7).unwrap();
        let f0 = InitialDensity::sample_support(&odd, |x| x * (1.0 - x)).unwrap();
        assert!(waiting_ratio(&odd.nodes(), &f0, &odd, &c, 2).is_ok());
        assert!(waiting_ratio(&odd.nodes(), &f0, &odd, &c, 8).is_err());
        assert!(waiting_ratio(&odd.nodes(), &f0, &odd, &c, 0).is_err());
    }

    #[test]
    fn flat_data_keeps_waiting() {
        let c = cfg(SchemeCase::Case1, 3.0, 0.01);
        let g = StaggeredGrid::over(0.0, 1.0, 8).unwrap();
        let mut f0 = InitialDensity::sample_support(&g, |x| x * (1.0 - x)).unwrap();
        f0.nodes[1] = 0.0;
        let s = detect_waiting_end(WaitingState::new(Side::Left), &TrajectoryState::initial(&g), &f0, &g, &c).unwrap();
        assert!(s.waiting);
        assert_eq!(s.ratio_history[0].1, f64::INFINITY);
    }

    #[test]
    fn meeting_rule() {
        let l = TrajectoryState { x: NodeField(vec![-1.0, -0.5, 0.0]), n: 0, t: 0.0 };
        let near = TrajectoryState { x: NodeField(vec![1e-12, 0.5, 1.0]), n: 0, t: 0.0 };
        let far = TrajectoryState { x: NodeField(vec![0.5, 0.7, 1.0]), n: 0, t: 0.0 };
        let over = TrajectoryState { x: NodeField(vec![-0.1, 0.7, 1.0]), n: 0, t: 0.0 };
        assert!(detect_meeting(&l, &near).unwrap());
        assert!(!detect_meeting(&l, &far).unwrap());
        assert!(matches!(detect_meeting(&l, &over), Err(PmeError::SupportOverlap { .. })));
    }

    #[test]
    fn merging_constant_columns() {
        let c = cfg(SchemeCase::Case1, 2.0, 0.01);
        let ls = TrajectoryState { x: NodeField((0..=10).map(|i| -1.0 + 0.1 * i as f64).collect()), n: 0, t: 0.0 };
        let rs = TrajectoryState { x: NodeField((0..=10).map(|i| 0.1 * i as f64).collect()), n: 0, t: 0.0 };
        let mut lf = vec![2.0; 11];
        lf[0] = 0.0;
        lf[10] = 0.0;
        let rf = lf.clone();
        let p = reconstruct_merged((&ls, &lf), (&rs, &rf), 40, &c).unwrap();
        assert_eq!(p.f0.nodes[0], 0.0);
        assert_eq!(p.f0.nodes[40], 0.0);
        for i in 4..=36 {
            assert!((p.f0.nodes[i] - 2.0).abs() < 1e-12, "{i}: {}", p.f0.nodes[i]);
        }
        assert!(p.f0.nodes.iter().all(|v| *v <= 2.0 + 1e-12));
        let bad = TrajectoryState { x: NodeField(vec![0.0, 0.5, 0.2]), n: 0, t: 0.0 };
        assert!(reconstruct_merged((&bad, &lf[..3]), (&rs, &rf), 10, &c).is_err());
    }
}
