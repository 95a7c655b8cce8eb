//! Experiment configuration files.
//!
//! A file holds one or more experiments, one per `[section]`. Keys before the
//! first section are shared defaults that every section may override:
//!
//! ```text
//! case = 1
//! m = 5/3
//!
//! [table1]
//! problem = smooth
//! M = 100
//! tau = 1/100
//! T = 0.05
//! ladder = 100:1/100, 200:1/400, 400:1/1600, 800:1/6400
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{PmeError, Result};
use crate::oracles::InitialData;
use crate::record::SnapshotPolicy;
use crate::trajectory::{SchemeCase, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Smooth,
    Barenblatt,
    Waiting,
    /// The two separated columns, each evolved on its own support until they meet.
    TwoColumn,
}

impl ProblemKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "smooth" => Ok(Self::Smooth),
            "barenblatt" => Ok(Self::Barenblatt),
            "waiting" => Ok(Self::Waiting),
            "two_column" => Ok(Self::TwoColumn),
            other => Err(PmeError::Config(format!("unknown problem '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Smooth => "smooth",
            Self::Barenblatt => "barenblatt",
            Self::Waiting => "waiting",
            Self::TwoColumn => "two_column",
        }
    }
}

/// What a convergence study measures its errors against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// The Barenblatt solution and trajectories.
    Analytic,
    /// A run of the same scheme on a finer grid, compared at shared labels.
    FineGrid { cells: usize, tau: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemKind,
    pub case: SchemeCase,
    pub m: f64,
    pub theta: f64,
    pub cells: usize,
    pub tau: f64,
    pub final_time: f64,
    /// Cells of the merged support; defaults to `2 (M_left + M_right)`.
    pub merge_cells: usize,
    pub lambda_prime: f64,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: usize,
    pub output_dir: PathBuf,
    /// `None` picks the default for the problem when a study runs.
    pub reference: Option<Reference>,
    /// `(M, tau)` levels of a convergence study, coarse to fine.
    pub ladder: Vec<(usize, f64)>,
    pub snapshots: SnapshotPolicy,
}

const KEYS: &[&str] = &[
    "problem",
    "case",
    "m",
    "theta",
    "M",
    "tau",
    "T",
    "M2",
    "lambda_prime",
    "newton_tol",
    "newton_max_iter",
    "output_dir",
    "reference",
    "reference_M",
    "reference_tau",
    "ladder",
    "snapshot_every",
    "snapshot_times",
];

/// Parses `0.25`, `1e-3` or a fraction such as `1/6400`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || PmeError::Config(format!("not a number: '{s}'"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| PmeError::Config(format!("{key}: expected a nonnegative integer, got '{s}'")))
}

/// `100:1/100, 200:1/400`
pub fn parse_ladder(s: &str) -> Result<Vec<(usize, f64)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (m, tau) = t
                .split_once(':')
                .ok_or_else(|| PmeError::Config(format!("ladder entry '{}' is not M:tau", t.trim())))?;
            Ok((parse_usize("ladder", m)?, parse_real(tau)?))
        })
        .collect()
}

impl ExperimentConfig {
    /// Defaults for `problem`; everything else is filled in by the caller or a file.
    pub fn new(problem: ProblemKind, case: SchemeCase, m: f64, cells: usize, tau: f64, final_time: f64) -> Self {
        Self {
            name: problem.name().to_string(),
            problem,
            case,
            m,
            theta: 0.0,
            cells,
            tau,
            final_time,
            merge_cells: 4 * cells,
            lambda_prime: SchemeConfig::DEFAULT_LAMBDA_PRIME,
            newton_tol: None,
            newton_max_iter: SchemeConfig::DEFAULT_NEWTON_MAX_ITER,
            output_dir: PathBuf::from("out"),
            reference: None,
            ladder: Vec::new(),
            snapshots: SnapshotPolicy::default(),
        }
    }

    fn from_map(name: &str, map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(PmeError::Config(format!("[{name}] unknown key '{k}'")));
        }
        let need = |k: &str| {
            map.get(k)
                .map(String::as_str)
                .ok_or_else(|| PmeError::Config(format!("[{name}] missing key '{k}'")))
        };
        let problem = ProblemKind::parse(need("problem")?)?;
        let case = SchemeCase::from_number(parse_usize("case", need("case")?)? as u32)?;
        let m = parse_real(need("m")?)?;
        let cells = parse_usize("M", need("M")?)?;
        let tau = parse_real(need("tau")?)?;
        let final_time = parse_real(need("T")?)?;
        let mut cfg = Self::new(problem, case, m, cells, tau, final_time);
        cfg.name = name.to_string();
        if let Some(v) = map.get("theta") {
            cfg.theta = parse_real(v)?;
        }
        if let Some(v) = map.get("M2") {
            cfg.merge_cells = parse_usize("M2", v)?;
        }
        if let Some(v) = map.get("lambda_prime") {
            cfg.lambda_prime = parse_real(v)?;
        }
        if let Some(v) = map.get("newton_tol") {
            cfg.newton_tol = Some(parse_real(v)?);
        }
        if let Some(v) = map.get("newton_max_iter") {
            cfg.newton_max_iter = parse_usize("newton_max_iter", v)?;
        }
        if let Some(v) = map.get("output_dir") {
            cfg.output_dir = PathBuf::from(v.trim());
        }
        if let Some(v) = map.get("ladder") {
            cfg.ladder = parse_ladder(v)?;
        }
        cfg.reference = match map.get("reference").map(|s| s.trim()) {
            None => {
                if map.contains_key("reference_M") || map.contains_key("reference_tau") {
                    return Err(PmeError::Config(format!(
                        "[{name}] reference_M / reference_tau need reference = fine_grid"
                    )));
                }
                None
            }
            Some("analytic") => Some(Reference::Analytic),
            Some("fine_grid") => Some(Reference::FineGrid {
                cells: parse_usize("reference_M", need("reference_M")?)?,
                tau: parse_real(need("reference_tau")?)?,
            }),
            Some(other) => return Err(PmeError::Config(format!("[{name}] unknown reference '{other}'"))),
        };
        if let Some(v) = map.get("snapshot_every") {
            cfg.snapshots.every = parse_usize("snapshot_every", v)?;
        }
        if let Some(v) = map.get("snapshot_times") {
            cfg.snapshots.times = v
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(parse_real)
                .collect::<Result<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(PmeError::Config(format!("[{}] {msg}", self.name)));
        self.scheme()?;
        if self.cells < 2 {
            return err(format!("M must be at least 2, got {}", self.cells));
        }
        if self.problem == ProblemKind::Waiting && !(0.0..=0.25).contains(&self.theta) {
            return err(format!("theta must lie in [0, 1/4], got {}", self.theta));
        }
        if self.problem == ProblemKind::TwoColumn && self.merge_cells < 2 {
            return err(format!("M2 must be at least 2, got {}", self.merge_cells));
        }
        for &(cells, tau) in &self.ladder {
            if cells < 2 || !(tau > 0.0) {
                return err(format!("bad ladder level M = {cells}, tau = {tau}"));
            }
        }
        if let Some(Reference::FineGrid { cells, tau }) = self.reference {
            if cells < 2 || !(tau > 0.0) {
                return err(format!("bad reference grid M = {cells}, tau = {tau}"));
            }
        }
        Ok(())
    }

    pub fn scheme(&self) -> Result<SchemeConfig> {
        self.scheme_at(self.tau)
    }

    pub fn scheme_at(&self, tau: f64) -> Result<SchemeConfig> {
        let mut s = SchemeConfig::new(self.case, self.m, tau, self.final_time)?;
        s.lambda_prime = self.lambda_prime;
        s.newton_tol = self.newton_tol;
        s.newton_max_iter = self.newton_max_iter;
        s.validate()?;
        Ok(s)
    }

    /// The initial data of a single-support problem.
    pub fn initial_data(&self) -> Result<InitialData> {
        match self.problem {
            ProblemKind::Smooth => Ok(InitialData::Smooth),
            ProblemKind::Barenblatt => Ok(InitialData::Barenblatt { m: self.m }),
            ProblemKind::Waiting => Ok(InitialData::Waiting { m: self.m, theta: self.theta }),
            ProblemKind::TwoColumn => Err(PmeError::Config(
                "two_column data has two supports; use the merge runner".into(),
            )),
        }
    }
}

/// Every experiment in a configuration file, in file order.
pub fn load_configs(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path)?;
    parse_configs(&text)
}

/// The single experiment in a file, or the one named `section`.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let all = load_configs(path)?;
    match all.len() {
        1 => Ok(all.into_iter().next().expect("one entry")),
        0 => Err(PmeError::Config(format!("{} defines no experiment", path.display()))),
        n => Err(PmeError::Config(format!(
            "{} defines {n} experiments; pick one by section name",
            path.display()
        ))),
    }
}

pub fn parse_configs(text: &str) -> Result<Vec<ExperimentConfig>> {
    let ini = Ini::load_from_str(text).map_err(|e| PmeError::Config(e.to_string()))?;
    let mut shared = BTreeMap::new();
    let mut sections = Vec::new();
    for (name, props) in ini.iter() {
        let map: BTreeMap<String, String> = props.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        match name {
            None => shared = map,
            Some(n) => sections.push((n.to_string(), map)),
        }
    }
    if sections.is_empty() {
        return if shared.is_empty() {
            Ok(Vec::new())
        } else {
            Ok(vec![ExperimentConfig::from_map("experiment", &shared)?])
        };
    }
    sections
        .into_iter()
        .map(|(name, own)| {
            let mut map = shared.clone();
            map.extend(own);
            ExperimentConfig::from_map(&name, &map)
        })
        .collect()
}
