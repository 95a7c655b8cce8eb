use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pme_core::free_boundary::{run_two_supports, run_waiting_time};
use pme_core::harness::{
    config::{parse_ladder, parse_real},
    emit_csv, load_configs, run_convergence_study, run_simulation, CsvOutput, ExperimentConfig, ProblemKind,
};
use pme_core::oracles::{exact_waiting_time, InitialData};
use pme_core::{Problem, SchemeCase};

/// Lagrangian trajectory solvers for the 1-D porous medium equation.
#[derive(Parser)]
#[command(name = "pme", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one problem to its final time and write the node series.
    Simulate(Common),
    /// Refinement study over a ladder of (M, tau) levels.
    Study {
        #[command(flatten)]
        common: Common,
        /// Levels as `M:tau` pairs, e.g. `100:1/100,200:1/400`.
        #[arg(long)]
        ladder: Option<String>,
    },
    /// Two-phase waiting-time run.
    Waiting(Common),
    /// Two separated columns evolved until they meet, then merged.
    Merge(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment file; every section is run unless --section picks one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    section: Option<String>,
    /// Output directory (overrides output_dir from the file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// smooth, barenblatt, waiting or two_column.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long = "case", value_parser = ["1", "2"])]
    case: Option<String>,
    #[arg(long = "m")]
    m: Option<String>,
    #[arg(long = "M")]
    cells: Option<usize>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long = "T")]
    final_time: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long = "M2")]
    merge_cells: Option<usize>,
}

impl Common {
    fn experiments(&self, default_problem: ProblemKind) -> Result<Vec<ExperimentConfig>> {
        let mut all = match &self.config {
            Some(path) => {
                let all = load_configs(path).with_context(|| format!("reading {}", path.display()))?;
                match &self.section {
                    Some(name) => {
                        let found: Vec<_> = all.into_iter().filter(|c| &c.name == name).collect();
                        if found.is_empty() {
                            bail!("no section [{name}] in {}", path.display());
                        }
                        found
                    }
                    None => all,
                }
            }
            None => {
                let problem = match &self.problem {
                    Some(p) => ProblemKind::parse(p)?,
                    None => default_problem,
                };
                let (m, cells, tau, t) = match problem {
                    ProblemKind::Smooth => (2.0, 100, 0.01, 0.05),
                    ProblemKind::Barenblatt => (3.0, 200, 0.01, 1.0),
                    ProblemKind::Waiting => (3.0, 100, 0.01, 0.5),
                    ProblemKind::TwoColumn => (5.0, 500, 1e-3, 0.5),
                };
                let mut cfg = ExperimentConfig::new(problem, SchemeCase::Case1, m, cells, tau, t);
                if problem == ProblemKind::Waiting {
                    cfg.theta = 0.25;
                }
                vec![cfg]
            }
        };
        if all.is_empty() {
            bail!("no experiments to run");
        }
        for cfg in all.iter_mut() {
            self.apply(cfg)?;
        }
        Ok(all)
    }

    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(p) = &self.problem {
            cfg.problem = ProblemKind::parse(p)?;
        }
        if let Some(c) = &self.case {
            cfg.case = SchemeCase::from_number(c.parse()?)?;
        }
        if let Some(v) = &self.m {
            cfg.m = parse_real(v)?;
        }
        if let Some(v) = self.cells {
            cfg.cells = v;
            if self.merge_cells.is_none() {
                cfg.merge_cells = 4 * v;
            }
        }
        if let Some(v) = &self.tau {
            cfg.tau = parse_real(v)?;
        }
        if let Some(v) = &self.final_time {
            cfg.final_time = parse_real(v)?;
        }
        if let Some(v) = &self.theta {
            cfg.theta = parse_real(v)?;
        }
        if let Some(v) = self.merge_cells {
            cfg.merge_cells = v;
        }
        cfg.validate()?;
        Ok(())
    }

    /// Directory for one experiment's files.
    fn out_dir(&self, cfg: &ExperimentConfig, several: bool) -> PathBuf {
        let base = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        if several {
            base.join(&cfg.name)
        } else {
            base
        }
    }
}

fn write(dir: &Path, file: &str, what: CsvOutput<'_>) -> Result<()> {
    let path = dir.join(file);
    emit_csv(what, &path).with_context(|| format!("writing {}", path.display()))?;
    println!("  wrote {}", path.display());
    Ok(())
}

fn simulate(common: &Common) -> Result<()> {
    let all = common.experiments(ProblemKind::Smooth)?;
    let several = all.len() > 1;
    for cfg in &all {
        println!("[{}] {} case {} m={} M={} tau={} T={}", cfg.name, cfg.problem.name(), cfg.case.number(), cfg.m, cfg.cells, cfg.tau, cfg.final_time);
        let record = run_simulation(cfg)?;
        let dir = common.out_dir(cfg, several);
        write(&dir, "series.csv", CsvOutput::Series(&record))?;
        write(&dir, "steps.csv", CsvOutput::Steps(&record))?;
        if !record.ratio_history.is_empty() {
            write(&dir, "ratios.csv", CsvOutput::Ratios(&record.ratio_history))?;
        }
        if let Some(t) = record.waiting_time {
            println!("  waiting time t*_h = {t:.6}");
        }
        if let Some(t) = record.meeting_time {
            println!("  meeting time t*_m = {t:.6}");
        }
        println!(
            "  {} steps, {:.3} s stepping, {} Newton iterations, min energy margin {:.3e}",
            record.steps.len(),
            record.stepping_seconds,
            record.total_newton_iterations(),
            record.min_energy_margin()
        );
    }
    Ok(())
}

fn study(common: &Common, ladder: Option<&str>) -> Result<()> {
    let all = common.experiments(ProblemKind::Barenblatt)?;
    let several = all.len() > 1;
    for cfg in &all {
        let levels = match ladder {
            Some(s) => parse_ladder(s)?,
            None if !cfg.ladder.is_empty() => cfg.ladder.clone(),
            None => vec![(cfg.cells, cfg.tau), (2 * cfg.cells, cfg.tau / 4.0)],
        };
        println!("[{}] {} case {} m={} T={}", cfg.name, cfg.problem.name(), cfg.case.number(), cfg.m, cfg.final_time);
        let table = run_convergence_study(cfg, &levels)?;
        println!("  {:>6} {:>12} {:>12} {:>7} {:>12} {:>7} {:>9}", "M", "tau", "L2(f)", "order", "Linf(f)", "order", "cpu(s)");
        for r in &table.rows {
            let o = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
            println!(
                "  {:>6} {:>12.4e} {:>12.4e} {:>7} {:>12.4e} {:>7} {:>9.3}",
                r.cells,
                r.tau,
                r.errors.l2_f,
                o(r.orders.map(|o| o.l2_f)),
                r.errors.linf_f,
                o(r.orders.map(|o| o.linf_f)),
                r.cpu_s
            );
        }
        write(&common.out_dir(cfg, several), "study.csv", CsvOutput::Study(&table))?;
    }
    Ok(())
}

fn waiting(common: &Common) -> Result<()> {
    let all = common.experiments(ProblemKind::Waiting)?;
    let several = all.len() > 1;
    for cfg in &all {
        if cfg.problem != ProblemKind::Waiting {
            bail!("[{}] the waiting command needs problem = waiting", cfg.name);
        }
        let problem = Problem::from_data(InitialData::Waiting { m: cfg.m, theta: cfg.theta }, cfg.cells, cfg.scheme()?)?;
        let out = run_waiting_time(&problem, cfg.snapshots.clone())?;
        let show = |t: Option<f64>| t.map(|t| format!("{t:.6}")).unwrap_or_else(|| "not reached".into());
        println!("[{}] m={} theta={} M={} tau={} case {}", cfg.name, cfg.m, cfg.theta, cfg.cells, cfg.tau, cfg.case.number());
        println!("  t*_h left  = {}", show(out.left.t_star_h));
        println!("  t*_h right = {}", show(out.right.t_star_h));
        println!("  exact      = {:.6}", exact_waiting_time(cfg.m, cfg.theta)?);
        let dir = common.out_dir(cfg, several);
        write(&dir, "series.csv", CsvOutput::Series(&out.record))?;
        write(&dir, "steps.csv", CsvOutput::Steps(&out.record))?;
        write(&dir, "ratios.csv", CsvOutput::Ratios(&out.record.ratio_history))?;
    }
    Ok(())
}

fn merge(common: &Common) -> Result<()> {
    let all = common.experiments(ProblemKind::TwoColumn)?;
    let several = all.len() > 1;
    for cfg in &all {
        if cfg.problem != ProblemKind::TwoColumn {
            bail!("[{}] the merge command needs problem = two_column", cfg.name);
        }
        let scheme = cfg.scheme()?;
        let left = Problem::from_data(InitialData::TwoColumnLeft, cfg.cells, scheme.clone())?;
        let right = Problem::from_data(InitialData::TwoColumnRight, cfg.cells, scheme)?;
        let out = run_two_supports(&left, &right, cfg.merge_cells, cfg.final_time, cfg.snapshots.clone())?;
        println!("[{}] m={} M={} per support, tau={}, M2={}", cfg.name, cfg.m, cfg.cells, cfg.tau, cfg.merge_cells);
        match (out.meeting_time, &out.merged) {
            (Some(t), Some(merged)) => {
                let mass = merged.f0.mass(&merged.grid);
                println!("  supports meet at t*_m = {t:.6}");
                println!("  mass before {:.10} after reconstruction {:.10}", out.premerge_mass, mass);
            }
            _ => println!("  supports did not meet before T = {}", cfg.final_time),
        }
        let dir = common.out_dir(cfg, several);
        write(&dir, "series.csv", CsvOutput::Series(&out.record))?;
        write(&dir, "steps.csv", CsvOutput::Steps(&out.record))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Study { common, ladder } => study(common, ladder.as_deref()),
        Command::Waiting(c) => waiting(c),
        Command::Merge(c) => merge(c),
    }
}
