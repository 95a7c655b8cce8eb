//! Experiment plumbing: configuration, runs, refinement studies and CSV output.

pub mod config;
pub mod output;
pub mod study;

pub use config::{load_config, load_configs, parse_configs, ExperimentConfig, ProblemKind, Reference};
pub use output::{emit_csv, CsvOutput};
pub use study::{run_convergence_study, LevelErrors, StudyRow, StudyTable};

use crate::driver::{simulate, Problem};
use crate::error::Result;
use crate::free_boundary::{run_two_supports, run_waiting_time};
use crate::oracles::InitialData;
use crate::record::SimulationRecord;

/// Runs one experiment from `t = 0` to its final time.
///
/// Waiting problems use the two-phase algorithm; two-column problems evolve both
/// supports until they meet and continue on the merged support.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<SimulationRecord> {
    cfg.validate()?;
    let scheme = cfg.scheme()?;
    match cfg.problem {
        ProblemKind::Smooth | ProblemKind::Barenblatt => {
            let problem = Problem::from_data(cfg.initial_data()?, cfg.cells, scheme)?;
            Ok(simulate(&problem, cfg.snapshots.clone())?.1)
        }
        ProblemKind::Waiting => {
            let problem = Problem::from_data(cfg.initial_data()?, cfg.cells, scheme)?;
            Ok(run_waiting_time(&problem, cfg.snapshots.clone())?.record)
        }
        ProblemKind::TwoColumn => {
            let left = Problem::from_data(InitialData::TwoColumnLeft, cfg.cells, scheme.clone())?;
            let right = Problem::from_data(InitialData::TwoColumnRight, cfg.cells, scheme)?;
            let out = run_two_supports(&left, &right, cfg.merge_cells, cfg.final_time, cfg.snapshots.clone())?;
            Ok(out.record)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::SchemeCase;

    #[test]
    fn zero_steps_keep_the_initial_state() {
        let cfg = ExperimentConfig::new(ProblemKind::Smooth, SchemeCase::Case1, 2.0, 20, 0.01, 0.0);
        let record = run_simulation(&cfg).unwrap();
        assert!(record.steps.is_empty());
        assert_eq!(record.snapshots.len(), 1);
        assert_eq!(record.snapshots[0].t, 0.0);
    }

    #[test]
    fn waiting_run_crosses_once() {
        let mut cfg = ExperimentConfig::new(ProblemKind::Waiting, SchemeCase::Case2, 3.0, 50, 0.02, 0.4);
        cfg.theta = 0.25;
        let record = run_simulation(&cfg).unwrap();
        assert!((record.waiting_time.unwrap() - 0.2).abs() < 1e-12);
        let crossings = record.ratio_history.iter().filter(|(_, r)| *r <= 1.0).count();
        assert_eq!(crossings, 1);
    }
}
