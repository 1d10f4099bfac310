//! Experiment harness: synthetic data, denoising runs, grid sweeps and
//! SNR evaluation, driven by flags or a `key = value` config file.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 solver failure.
//! `BLOCKREG_THREADS` caps the number of worker threads.

mod config;
mod experiment;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::{load_config_text, num, ExperimentConfig, Method, NoiseKind, Task, KEYS};
pub use experiment::{build_report, report_body, run_grid, Outcome, ResultRecord, TIMING_SECTION};

pub const THREADS_ENV: &str = "BLOCKREG_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Solver(crate::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Solver(_) | CliError::Failed(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "blockreg",
    version,
    about = "Block-sparse regularized denoising experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the Cantor test signal as CSV.
    Synth(Opts),
    /// Denoise a 1D signal (Cantor by default) with fixed hyperparameters.
    Denoise(Opts),
    /// Denoise a PGM image.
    Denoise2d(Opts),
    /// Full-factorial hyperparameter sweep with the best cell per noise level.
    Sweep(Opts),
    /// SNR of an estimate against a reference.
    Eval(Opts),
}

/// Every flag mirrors a config key; flags override `--config`.
#[derive(Debug, Args)]
struct Opts {
    /// `key = value` file, or a previous report.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Clean signal (CSV) or image (PGM).
    #[arg(long)]
    input: Option<String>,
    /// Report path (CSV path for synth). Stdout if omitted.
    #[arg(long, short)]
    output: Option<String>,
    /// Plot-ready CSV of trial 0 for the first noise level.
    #[arg(long)]
    series: Option<String>,
    /// Prefix for denoised PGM files.
    #[arg(long)]
    image_out: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Ternary digits used for the Cantor signal.
    #[arg(long)]
    depth: Option<String>,
    /// Top-left crop, `HxW`.
    #[arg(long)]
    crop: Option<String>,
    /// quadratic | absolute
    #[arg(long)]
    loss: Option<String>,
    /// Comma list of proposed, tv.
    #[arg(long)]
    methods: Option<String>,
    /// Comma list.
    #[arg(long)]
    lambda: Option<String>,
    /// Comma list for TV; defaults to the lambda grid.
    #[arg(long)]
    tv_lambda: Option<String>,
    /// Comma list; `inf` allowed.
    #[arg(long)]
    alpha: Option<String>,
    /// gaussian | salt-pepper
    #[arg(long)]
    noise: Option<String>,
    /// Comma list of input SNRs in dB.
    #[arg(long)]
    noise_snr_db: Option<String>,
    /// Comma list of salt-and-pepper densities.
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tau1: Option<String>,
    #[arg(long)]
    tau2: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    block_threshold: Option<String>,
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    estimate: Option<String>,
}

impl Opts {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("input", &self.input),
            ("output", &self.output),
            ("series", &self.series),
            ("image_out", &self.image_out),
            ("n", &self.n),
            ("depth", &self.depth),
            ("crop", &self.crop),
            ("loss", &self.loss),
            ("methods", &self.methods),
            ("lambda", &self.lambda),
            ("tv_lambda", &self.tv_lambda),
            ("alpha", &self.alpha),
            ("noise", &self.noise),
            ("noise_snr_db", &self.noise_snr_db),
            ("density", &self.density),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("tau1", &self.tau1),
            ("tau2", &self.tau2),
            ("max_iter", &self.max_iter),
            ("tol", &self.tol),
            ("block_threshold", &self.block_threshold),
            ("reference", &self.reference),
            ("estimate", &self.estimate),
        ]
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (task, opts) = match &cli.command {
        Command::Synth(o) => (Task::Synth, o),
        Command::Denoise(o) => (Task::Denoise, o),
        Command::Denoise2d(o) => (Task::Denoise2d, o),
        Command::Sweep(o) => (Task::Sweep, o),
        Command::Eval(o) => (Task::Eval, o),
    };
    let mut map = match &opts.config {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            load_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    map.remove("task");
    for (key, value) in opts.overrides() {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    let cfg = ExperimentConfig::from_map(task, &map)?;
    with_pool(|| execute(&cfg))
}

fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Runs one resolved config and writes its outputs.
pub fn execute(cfg: &ExperimentConfig) -> Result<(), CliError> {
    match cfg.task {
        Task::Synth => {
            let x = experiment::synth(cfg)?;
            if cfg.output.is_none() {
                for v in &x {
                    println!("{}", num(*v));
                }
            }
            Ok(())
        }
        Task::Eval => emit(cfg, &experiment::eval(cfg)?.render()),
        Task::Denoise | Task::Denoise2d | Task::Sweep => {
            let start = Instant::now();
            let (outcome, artifacts) = run_grid(cfg)?;
            experiment::write_artifacts(cfg, &artifacts)?;
            let doc = build_report(cfg, &outcome, start.elapsed().as_secs_f64());
            emit(cfg, &doc.render())?;
            if outcome.failed {
                let n: usize = outcome.records.iter().map(|r| r.failures.len()).sum();
                return Err(CliError::Failed(format!(
                    "{n} trial(s) failed; see the report"
                )));
            }
            Ok(())
        }
    }
}

fn emit(cfg: &ExperimentConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
