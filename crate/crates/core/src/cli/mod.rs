//! Command-line front end. Every subcommand is also callable as a function
//! so tests can drive it without spawning a process.

mod ablate;
mod bench;
mod eval;
mod run;
mod sim;
mod train;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::cascade::CascadeConfig;
use crate::error::Error;

pub use ablate::{cmd_ablate, load_sequence_dir, load_sequences, AblateArgs};
pub use bench::{bench_input, cmd_bench, read_report, regression_gate, write_report, BenchArgs, BenchReport};
pub use eval::{cmd_eval, EvalArgs};
pub use run::{cmd_run, run_manifest, summary_path, RunArgs, RunManifest, RunSummary};
pub use sim::{cmd_sim, resolve_scene, write_scene, SimArgs, SimInventory};
pub use train::{cmd_train_embed, TrainArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONSISTENCY: i32 = 3;

/// Environment variable capping `ablate` worker threads.
pub const THREADS_ENV: &str = "OVSLINK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ovslink", version, about = "One-pass cascaded mask association")]
pub struct Cli {
    /// Cascade configuration file (flat key=value)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for simulation and training
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path (file or directory, depending on the subcommand)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Only print errors
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Associate a candidate stream and write predictions
    Run(RunArgs),
    /// Render a synthetic sequence
    Sim(SimArgs),
    /// Score predictions against ground truth
    Eval(EvalArgs),
    /// Time association on memory-resident inputs
    Bench(BenchArgs),
    /// Sweep cascade thresholds over sequences
    Ablate(AblateArgs),
    /// Train the embedding projection with the triplet loss
    TrainEmbed(TrainArgs),
}

/// Options shared by all subcommands.
#[derive(Clone, Debug, Default)]
pub struct GlobalOpts {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

impl GlobalOpts {
    pub fn cascade_config(&self) -> Result<CascadeConfig, CliError> {
        match &self.config {
            None => Ok(CascadeConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
                CascadeConfig::parse_kv(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
            }
        }
    }

    pub(crate) fn require_out(&self, what: &str) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::input(format!("--out is required ({what})")))
    }

    pub(crate) fn say(&self, msg: impl fmt::Display) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn consistency(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONSISTENCY,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_consistency() { EXIT_CONSISTENCY } else { EXIT_INPUT },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let g = GlobalOpts {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Run(a) => cmd_run(&a, &g).map(|_| ()),
        Command::Sim(a) => cmd_sim(&a, &g).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a, &g).map(|_| ()),
        Command::Bench(a) => cmd_bench(&a, &g).map(|_| ()),
        Command::Ablate(a) => cmd_ablate(&a, &g).map(|_| ()),
        Command::TrainEmbed(a) => cmd_train_embed(&a, &g).map(|_| ()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("OVSLINK_LOG")
        .format_timestamp(None)
        .try_init();
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

/// Writes through a temp file in the destination directory and renames it
/// into place only when `fill` succeeds.
pub(crate) fn write_atomic<F>(path: &Path, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

pub(crate) fn worker_threads() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, usize::from);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n.min(avail),
        _ => avail,
    }
}
