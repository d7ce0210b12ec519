//! `flowlens` command-line front end.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 an analysis
//! that produced no result (no flows, unknown class, signal too short).

pub mod commands;
pub mod settings;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{analyze, convert, label, report, spectrogram};
pub use settings::{Overrides, Settings};

#[derive(Debug, Parser)]
#[command(name = "flowlens", version, about = "Convert pcaps to labeled temporal flow records and analyze them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Io {
    /// Input files (captures may also be given as directories)
    #[arg(long = "in", required = true, num_args = 1.., value_name = "PATH")]
    pub inputs: Vec<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Meter pcap captures into a flow CSV
    Convert(Io),
    /// Attach ground-truth labels to a flow CSV
    Label(Io),
    /// Distributions and time series over a flow CSV
    Analyze {
        #[arg(value_enum)]
        kind: AnalysisKind,
        #[command(flatten)]
        io: Io,
    },
    /// Per-class STFT spectrograms over a flow CSV
    Spectrogram(Io),
    /// Convert, label, analyze and spectrogram in one run
    Report(Io),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisKind {
    /// Flow length distribution
    Fld,
    /// Inter-arrival time distribution
    Iat,
    /// Flows per interval
    Flows,
    /// Feature sums per interval
    Numeric,
    /// Distinct endpoint values per interval
    Unique,
}

impl AnalysisKind {
    pub const ALL: [AnalysisKind; 5] =
        [AnalysisKind::Fld, AnalysisKind::Iat, AnalysisKind::Flows, AnalysisKind::Numeric, AnalysisKind::Unique];
}

impl fmt::Display for AnalysisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalysisKind::Fld => "fld",
            AnalysisKind::Iat => "iat",
            AnalysisKind::Flows => "flows",
            AnalysisKind::Numeric => "numeric",
            AnalysisKind::Unique => "unique",
        })
    }
}

/// A failed run, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input, configuration or I/O (exit 1).
    Input(anyhow::Error),
    /// The analysis had nothing to work on (exit 2).
    Empty(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Empty(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) | Failure::Empty(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

/// Execute a parsed command line.
pub fn execute(cli: Cli) -> Result<Vec<PathBuf>, Failure> {
    let settings = Settings::resolve(&cli.overrides)?;
    match cli.command {
        Command::Convert(io) => convert(&io.inputs, &io.out, &settings).map(|s| s.written),
        Command::Label(io) => label(&io.inputs, &io.out, &settings).map(|s| s.written),
        Command::Analyze { kind, io } => analyze(kind, &io.inputs, &io.out, &settings),
        Command::Spectrogram(io) => spectrogram(&io.inputs, &io.out, &settings).map(|s| s.written),
        Command::Report(io) => report(&io.inputs, &io.out, &settings),
    }
}

/// Parse arguments, run, report, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(written) => {
            for p in written {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
