//! Refinement ladders: errors against a reference and observed orders.

use rayon::prelude::*;

use crate::driver::{simulate, Problem};
use crate::error::{PmeError, Result};
use crate::grid::{density_weights, norm_l2_weighted, norm_linf, trajectory_weights};
use crate::oracles::{barenblatt, barenblatt_trajectory};
use crate::record::{SimulationRecord, SnapshotPolicy};

use super::config::{ExperimentConfig, ProblemKind, Reference};

/// A fine-grid reference must be at least this many times finer than the finest level.
pub const MIN_REFERENCE_FACTOR: usize = 4;
/// Default fine-grid reference: this many times the finest level.
pub const DEFAULT_REFERENCE_FACTOR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LevelErrors {
    pub l2_f: f64,
    pub linf_f: f64,
    pub l2_x: f64,
    pub linf_x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub cells: usize,
    pub tau: f64,
    pub errors: LevelErrors,
    /// Orders against the previous row; `None` on the first row.
    pub orders: Option<LevelErrors>,
    /// Wall-clock seconds of the stepping loop.
    pub cpu_s: f64,
    /// Smallest per-step energy margin of the run; negative means the inequality broke.
    pub energy_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    /// Energy margin of the fine-grid reference run, when there is one.
    pub reference_energy_margin: Option<f64>,
}

/// `log(e_coarse / e_fine) / log(M_fine / M_coarse)`; for a halving of `h` this is `log2`.
pub fn observed_order(e_coarse: f64, e_fine: f64, m_coarse: usize, m_fine: usize) -> f64 {
    (e_coarse / e_fine).ln() / (m_fine as f64 / m_coarse as f64).ln()
}

impl StudyTable {
    /// Levels are `(M, tau, errors, cpu seconds, energy margin)`.
    pub fn from_levels(levels: Vec<(usize, f64, LevelErrors, f64, f64)>) -> Self {
        let mut rows: Vec<StudyRow> = Vec::with_capacity(levels.len());
        for (cells, tau, errors, cpu_s, energy_margin) in levels {
            let orders = rows.last().map(|p: &StudyRow| {
                let o = |a: f64, b: f64| observed_order(a, b, p.cells, cells);
                LevelErrors {
                    l2_f: o(p.errors.l2_f, errors.l2_f),
                    linf_f: o(p.errors.linf_f, errors.linf_f),
                    l2_x: o(p.errors.l2_x, errors.l2_x),
                    linf_x: o(p.errors.linf_x, errors.linf_x),
                }
            });
            rows.push(StudyRow { cells, tau, errors, orders, cpu_s, energy_margin });
        }
        Self { rows, reference_energy_margin: None }
    }
}

/// The reference a study uses when the config does not name one.
pub fn default_reference(cfg: &ExperimentConfig, ladder: &[(usize, f64)]) -> Result<Reference> {
    match cfg.problem {
        ProblemKind::Barenblatt => Ok(Reference::Analytic),
        ProblemKind::Smooth => {
            let &(cells, tau) = ladder
                .iter()
                .max_by_key(|l| l.0)
                .ok_or_else(|| PmeError::Config("empty ladder".into()))?;
            let ref_cells = DEFAULT_REFERENCE_FACTOR * cells;
            // keep tau / h^2 of the finest level
            let factor = (DEFAULT_REFERENCE_FACTOR * DEFAULT_REFERENCE_FACTOR) as f64;
            Ok(Reference::FineGrid { cells: ref_cells, tau: tau / factor })
        }
        other => Err(PmeError::Config(format!("no convergence study for the {} problem", other.name()))),
    }
}

fn final_state(cfg: &ExperimentConfig, cells: usize, tau: f64) -> Result<(Problem, SimulationRecord)> {
    let problem = Problem::from_data(cfg.initial_data()?, cells, cfg.scheme_at(tau)?)?;
    let (_, record) = simulate(&problem, SnapshotPolicy::default())?;
    Ok((problem, record))
}

fn analytic_errors(problem: &Problem, record: &SimulationRecord, m: f64) -> Result<LevelErrors> {
    let snap = record.final_snapshot().ok_or_else(|| PmeError::InvalidParameter("empty run".into()))?;
    let t = snap.t;
    let ef: Vec<f64> = snap.x.iter().zip(&snap.f).map(|(&x, &f)| f - barenblatt(x, t, m)).collect();
    let ex: Vec<f64> = snap.x.iter().zip(&snap.labels).map(|(&x, &l)| x - barenblatt_trajectory(l, t, m)).collect();
    Ok(LevelErrors {
        l2_f: norm_l2_weighted(&ef, &density_weights(&snap.x))?,
        linf_f: norm_linf(&ef),
        l2_x: norm_l2_weighted(&ex, &trajectory_weights(&problem.grid))?,
        linf_x: norm_linf(&ex),
    })
}

fn reference_errors(problem: &Problem, record: &SimulationRecord, reference: &SimulationRecord) -> Result<LevelErrors> {
    let snap = record.final_snapshot().ok_or_else(|| PmeError::InvalidParameter("empty run".into()))?;
    let fine = reference.final_snapshot().ok_or_else(|| PmeError::InvalidParameter("empty reference".into()))?;
    let cells = snap.x.len() - 1;
    let fine_cells = fine.x.len() - 1;
    if fine_cells % cells != 0 {
        return Err(PmeError::Config(format!(
            "reference M = {fine_cells} is not a multiple of M = {cells}"
        )));
    }
    let s = fine_cells / cells;
    let ef: Vec<f64> = (0..=cells).map(|i| snap.f[i] - fine.f[s * i]).collect();
    let ex: Vec<f64> = (0..=cells).map(|i| snap.x[i] - fine.x[s * i]).collect();
    Ok(LevelErrors {
        l2_f: norm_l2_weighted(&ef, &density_weights(&snap.x))?,
        linf_f: norm_linf(&ef),
        l2_x: norm_l2_weighted(&ex, &trajectory_weights(&problem.grid))?,
        linf_x: norm_linf(&ex),
    })
}

/// Runs every ladder level (in parallel) and tabulates errors and orders.
pub fn run_convergence_study(cfg: &ExperimentConfig, ladder: &[(usize, f64)]) -> Result<StudyTable> {
    if ladder.is_empty() {
        return Err(PmeError::Config("a study needs at least one ladder level".into()));
    }
    let reference = match cfg.reference {
        Some(r) => r,
        None => default_reference(cfg, ladder)?,
    };
    let finest = ladder.iter().map(|l| l.0).max().unwrap_or(0);
    let fine_run = match reference {
        Reference::Analytic => {
            if cfg.problem != ProblemKind::Barenblatt {
                return Err(PmeError::Config("an analytic reference exists only for barenblatt".into()));
            }
            None
        }
        Reference::FineGrid { cells, tau } => {
            if cells < MIN_REFERENCE_FACTOR * finest {
                return Err(PmeError::Config(format!(
                    "reference M = {cells} must be at least {MIN_REFERENCE_FACTOR} x the finest level {finest}"
                )));
            }
            Some((cells, tau))
        }
    };
    let (reference_record, levels) = rayon::join(
        || fine_run.map(|(cells, tau)| final_state(cfg, cells, tau).map(|r| r.1)).transpose(),
        || {
            ladder
                .par_iter()
                .map(|&(cells, tau)| final_state(cfg, cells, tau).map(|r| (cells, tau, r)))
                .collect::<Result<Vec<_>>>()
        },
    );
    let reference_record = reference_record?;
    let levels = levels?
        .into_iter()
        .map(|(cells, tau, (problem, record))| {
            let errors = match &reference_record {
                None => analytic_errors(&problem, &record, cfg.m)?,
                Some(fine) => reference_errors(&problem, &record, fine)?,
            };
            Ok((cells, tau, errors, record.stepping_seconds, record.min_energy_margin()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = StudyTable::from_levels(levels);
    table.reference_energy_margin = reference_record.as_ref().map(SimulationRecord::min_energy_margin);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::SchemeCase;

    #[test]
    fn orders_follow_the_error_ratio() {
        assert!((observed_order(4.0, 1.0, 100, 200) - 2.0).abs() < 1e-15);
        assert!((observed_order(2.5, 1.0, 1000, 2500) - 1.0).abs() < 1e-15);
        let e = |v: f64| LevelErrors { l2_f: v, linf_f: v, l2_x: v, linf_x: v };
        let t = StudyTable::from_levels(vec![(10, 0.1, e(1.0), 0.0, 0.0), (20, 0.025, e(0.25), 0.0, 0.0)]);
        assert!(t.rows[0].orders.is_none());
        assert!((t.rows[1].orders.unwrap().l2_f - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_level_has_no_order() {
        let cfg = ExperimentConfig::new(ProblemKind::Barenblatt, SchemeCase::Case2, 2.0, 40, 0.01, 0.05);
        let t = run_convergence_study(&cfg, &[(40, 0.01)]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].orders.is_none());
        assert!(t.rows[0].errors.l2_f > 0.0);
    }

    #[test]
    fn coarse_reference_is_rejected() {
        let mut cfg = ExperimentConfig::new(ProblemKind::Smooth, SchemeCase::Case2, 2.0, 10, 0.01, 0.01);
        cfg.reference = Some(Reference::FineGrid { cells: 20, tau: 1e-3 });
        assert!(run_convergence_study(&cfg, &[(10, 0.01)]).is_err());
        let w = ExperimentConfig::new(ProblemKind::Waiting, SchemeCase::Case2, 3.0, 10, 0.01, 0.01);
        assert!(run_convergence_study(&w, &[(10, 0.01)]).is_err());
    }
}
