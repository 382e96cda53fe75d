use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use l4s_sim::expcli::{self, ExpError, MatrixConfig, DEFAULT_FAIR_LO, OUT_DIR_ENV, RESULTS_FILE};

/// Run congestion-control coexistence experiments on a simulated dumbbell.
#[derive(Parser, Debug)]
#[command(name = "l4s-sim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every cell of an experiment grid and write results.csv.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        jobs: Option<usize>,
        /// Trial k runs with seed K + k.
        #[arg(long, value_name = "K")]
        seed_base: Option<u64>,
        /// Override the number of trials per cell.
        #[arg(long)]
        trials: Option<u32>,
        /// Override the run length, in seconds.
        #[arg(long, value_name = "SECS")]
        duration: Option<f64>,
        /// Also write a per-trial time series.
        #[arg(long)]
        timeseries: bool,
    },
    /// Print the enable-Prague table for a finished run.
    Recommend {
        /// Directory holding results.csv, or the CSV itself.
        #[arg(long = "in", env = OUT_DIR_ENV)]
        input: PathBuf,
        /// Minimum throughput share either flow must keep.
        #[arg(long, default_value_t = DEFAULT_FAIR_LO)]
        fair_lo: f64,
    },
    /// List the scenario ids a grid expands to.
    ListScenarios {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Grid description (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in replication grid.
    #[arg(long)]
    paper_replication: bool,
}

impl Source {
    fn load(&self) -> Result<MatrixConfig, ExpError> {
        match &self.config {
            Some(path) => MatrixConfig::load(path),
            None => Ok(MatrixConfig::paper_replication()),
        }
    }
}

fn run(cmd: Command) -> Result<(), ExpError> {
    match cmd {
        Command::Run { source, out, jobs, seed_base, trials, duration, timeseries } => {
            let mut cfg = source.load()?;
            cfg.jobs = jobs.unwrap_or(cfg.jobs);
            cfg.seed_base = seed_base.unwrap_or(cfg.seed_base);
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.duration_s = duration.unwrap_or(cfg.duration_s);
            cfg.timeseries |= timeseries;
            let out = expcli::resolve_out_dir(out, &cfg);
            let n = cfg.scenarios()?.len();
            eprintln!("running {n} cells x {} trials on {} workers", cfg.trials, expcli::resolve_jobs(cfg.jobs));
            let t0 = Instant::now();
            let sum = expcli::run_matrix(&cfg, &out)?;
            eprintln!("wrote {} rows to {} in {:.1}s", sum.rows, sum.results.display(), t0.elapsed().as_secs_f64());
        }
        Command::Recommend { input, fair_lo } => {
            let path = if input.is_dir() { input.join(RESULTS_FILE) } else { input };
            let rows = expcli::read_rows_file(&path)?;
            print!("{}", expcli::recommend(&rows, fair_lo)?);
        }
        Command::ListScenarios { source } => {
            let cfg = source.load()?;
            for s in cfg.scenarios()? {
                println!("{}", s.id());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage mistakes are configuration errors; help and version are not errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
