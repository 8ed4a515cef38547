//! Command-line front end: `sweep`, `validate` and `query`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O error.
//! `ANOMA_THREADS` overrides the worker count.

pub mod config;
pub mod query;
pub mod sweep;
pub mod validate;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::Range;
pub use query::{query, QueryPoint};
pub use sweep::{evaluate, run_sweep, FigureId, FigureParams, SweepSpec, Table};
pub use validate::{run_validate, Check, Suite};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ANOMA_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "anoma", version, about = "Two-user uplink ANOMA throughput analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the data behind one figure as CSV.
    Sweep {
        figure_id: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dotted `key=value` override; may be repeated.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run a self-check suite: routes, theorems, timing, waveform or all.
    Validate { suite: String },
    /// Report every figure for a single operating point.
    Query {
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool already built by an earlier call in this process is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    configure_threads()?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match command {
        Command::Sweep { figure_id, config, set } => {
            let figure: FigureId = figure_id.parse()?;
            let file = config.as_deref().map(config::read_config).transpose()?;
            let spec = SweepSpec::resolve(figure, file.as_ref(), &set)?;
            run_sweep(&spec, out)?;
        }
        Command::Validate { suite } => {
            let checks = run_validate(suite.parse()?)?;
            for c in &checks {
                writeln!(out, "{c}").map_err(io)?;
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::Validation(format!("{failed} of {} checks failed", checks.len())));
            }
        }
        Command::Query { set } => {
            let fields = query(&QueryPoint::resolve(&set)?)?;
            writeln!(out, "{}", query::format_line(&fields)).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "anoma: {e}");
            e.exit_code()
        }
    }
}
