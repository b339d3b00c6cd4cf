//! `tltc`: check, realize, query and slice temporal logic specifications.
//!
//! Exit codes: 0 success or member, 1 empty root set or non-member,
//! 2 incompatible or unsound, 3 parse, validation or domain error,
//! 4 numeric failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Hj,
    Hz,
}

#[derive(Debug, Parser)]
#[command(name = "tltc", version, about = "Temporal logic tree compiler and realizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the spec, build the tree and print the compatibility report.
    Check {
        spec: PathBuf,
        #[arg(long, value_enum)]
        backend: BackendKind,
    },
    /// Compute the satisfaction set and write it to a result directory.
    Realize {
        spec: PathBuf,
        #[arg(long, value_enum)]
        backend: BackendKind,
        #[arg(long)]
        out: PathBuf,
        /// Realize even when a node would compose approximations unsoundly.
        #[arg(long)]
        allow_unsound: bool,
        /// Use the spec's `full_grid` instead of `grid` (hj only).
        #[arg(long)]
        full_grid: bool,
    },
    /// Test whether a state belongs to a stored satisfaction set.
    Query {
        result: PathBuf,
        /// Comma-separated state coordinates.
        #[arg(long, allow_hyphen_values = true)]
        state: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        time: f64,
    },
    /// Export a two-axis section of a stored result as CSV.
    Slice {
        result: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        time: f64,
        /// Two axis names, for example `x,v`.
        #[arg(long)]
        axes: String,
        /// Values for the remaining axes, for example `theta=0,v=16`.
        #[arg(long, allow_hyphen_values = true)]
        fix: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), commands::Failure> {
    let Ok(raw) = std::env::var("TLTC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| commands::Failure::usage(format!("TLTC_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| commands::Failure::usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let outcome = configure_threads().and_then(|()| match cli.command {
        Command::Check { spec, backend } => commands::check(&spec, backend),
        Command::Realize {
            spec,
            backend,
            out,
            allow_unsound,
            full_grid,
        } => commands::realize(&spec, backend, &out, allow_unsound, full_grid),
        Command::Query { result, state, time } => commands::query(&result, &state, time),
        Command::Slice {
            result,
            time,
            axes,
            fix,
            csv,
        } => commands::slice(&result, time, &axes, fix.as_deref(), csv.as_deref()),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("tltc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
