//! Command-line front end: `validate`, `spectrum`, `compare`, `geodesic`
//! and `morphism` over the built-in examples or JSON input files.

mod commands;
mod source;

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use source::{Loaded, SourceArgs};

/// Exit code for verified claims.
pub const EXIT_OK: i32 = 0;
/// Exit code for refuted or mismatched claims.
pub const EXIT_MISMATCH: i32 = 1;
/// Exit code for usage and parse errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] nilspec_core::io::IoError),
    #[error("output: {0}")]
    Output(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Output(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Radius of the word-exponent window on derived coordinates.
    #[arg(long)]
    pub window: Option<i64>,
}

#[derive(Debug, Parser)]
#[command(name = "nilspec", version, about = "Length spectra of 2- and 3-step nilmanifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural checks on an algebra, metric and lattices.
    Validate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Multiplicities `m′`, `m″` at given lengths.
    Spectrum(commands::SpectrumArgs),
    /// Compares the length spectra of a lattice pair.
    Compare(commands::CompareArgs),
    /// Searches and certifies a geodesic translated by a lattice element.
    Geodesic(commands::GeodesicArgs),
    /// Automorphism, almost-inner and marking checks.
    Morphism(commands::MorphismArgs),
}

/// Caps the global thread pool at `NILSPEC_THREADS` when set.
fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("NILSPEC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("NILSPEC_THREADS must be a positive integer, got '{v}'")))?;
        // a pool built earlier in the same process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Validate { source, common } => commands::validate(source, common, out),
        Command::Spectrum(a) => commands::spectrum(a, out),
        Command::Compare(a) => commands::compare(a, out),
        Command::Geodesic(a) => commands::geodesic(a, out),
        Command::Morphism(a) => commands::morphism(a, out),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
