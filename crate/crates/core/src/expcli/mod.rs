//! Experiment-grid runner behind the `l4s-sim` command line.
//!
//! A [`MatrixConfig`] expands into scenarios; every (scenario, seed) pair is a
//! job for the worker pool. Results are written in grid order, so the CSV is
//! byte-identical for any worker count.

mod config;
mod pool;
mod recommend;
mod rows;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

pub use config::{GridConfig, MatrixConfig, NetworkConfig};
pub use pool::{map_parallel, resolve_jobs};
pub use recommend::{recommend, BufferRow, OpponentCol, Recommendation, TableCell, Verdict, Violation, DEFAULT_FAIR_LO};
pub use rows::{cell_rows, read_rows, read_rows_file, write_rows, write_series, ResultRow, MEAN, STD};

use crate::harness::{aggregate, run_trial, Scenario, SimError, TrialResult};

pub const RESULTS_FILE: &str = "results.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const SERIES_DIR: &str = "timeseries";
/// Overrides the default output directory.
pub const OUT_DIR_ENV: &str = "L4SIM_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ExpError {
    #[error("config error at {at}: {msg}")]
    Config { at: String, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{failed} of {total} trials failed; first: {first}")]
    Trials { failed: usize, total: usize, first: String },
}

impl ExpError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        ExpError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status: 1 for anything the user must fix in the
    /// configuration, 2 for failures while running or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Config { .. } => 1,
            _ => 2,
        }
    }
}

/// A finished cell: its trials in seed order.
#[derive(Debug)]
pub struct CellOutcome {
    pub scenario: Scenario,
    pub trials: Vec<Result<TrialResult, SimError>>,
}

impl CellOutcome {
    /// Per-seed rows plus mean/std, or `None` if any trial failed.
    pub fn rows(&self) -> Option<Vec<crate::expcli::ResultRow>> {
        let ok: Vec<TrialResult> = self.trials.iter().filter_map(|t| t.as_ref().ok().cloned()).collect();
        if ok.len() != self.trials.len() {
            return None;
        }
        let agg = aggregate(&ok).ok()?;
        Some(cell_rows(&self.scenario, &ok, &agg))
    }
}

/// Runs every (scenario, seed) pair on `jobs` workers.
pub fn execute(scenarios: &[Scenario], seeds: &[u64], jobs: usize) -> Vec<CellOutcome> {
    let work: Vec<(usize, u64)> = (0..scenarios.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let mut results = map_parallel(&work, resolve_jobs(jobs), |&(i, seed)| run_trial(&scenarios[i], seed)).into_iter();
    scenarios
        .iter()
        .map(|s| CellOutcome { scenario: s.clone(), trials: results.by_ref().take(seeds.len()).collect() })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub cells: usize,
    pub trials: usize,
    pub rows: usize,
    pub results: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, ExpError> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| ExpError::io(path, e))
}

/// Runs the grid and writes `results.csv`, the resolved config and, if asked,
/// one time series per trial into `out_dir`.
///
/// Cells whose trials all succeeded are written even when others failed; the
/// failure is then reported as [`ExpError::Trials`].
pub fn run_matrix(cfg: &MatrixConfig, out_dir: &Path) -> Result<RunSummary, ExpError> {
    let scenarios = cfg.scenarios()?;
    let seeds = cfg.seeds();
    fs::create_dir_all(out_dir).map_err(|e| ExpError::io(out_dir, e))?;
    let cfg_path = out_dir.join(CONFIG_FILE);
    fs::write(&cfg_path, cfg.to_toml()).map_err(|e| ExpError::io(&cfg_path, e))?;

    let outcomes = execute(&scenarios, &seeds, cfg.jobs);

    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for cell in &outcomes {
        for (seed, t) in seeds.iter().zip(&cell.trials) {
            if let Err(e) = t {
                failed.push(format!("{} seed {seed}: {e}", cell.scenario.id()));
            }
        }
        rows.extend(cell.rows().unwrap_or_default());
    }
    let results = out_dir.join(RESULTS_FILE);
    let mut w = create(&results)?;
    write_rows(&mut w, &rows)?;
    w.flush().map_err(|e| ExpError::io(&results, e))?;

    if cfg.timeseries {
        let dir = out_dir.join(SERIES_DIR);
        fs::create_dir_all(&dir).map_err(|e| ExpError::io(&dir, e))?;
        for cell in &outcomes {
            for t in cell.trials.iter().flatten() {
                let path = dir.join(format!("{}_seed{}.csv", cell.scenario.id(), t.seed));
                let mut w = create(&path)?;
                write_series(&mut w, &t.series)?;
                w.flush().map_err(|e| ExpError::io(&path, e))?;
            }
        }
    }

    let total = scenarios.len() * seeds.len();
    if let Some(first) = failed.first() {
        return Err(ExpError::Trials { failed: failed.len(), total, first: first.clone() });
    }
    Ok(RunSummary { cells: scenarios.len(), trials: total, rows: rows.len(), results })
}

/// Output directory precedence: explicit flag, then the environment, then the
/// config file, then `./results`.
pub fn resolve_out_dir(flag: Option<PathBuf>, cfg: &MatrixConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"))
}
