//! `nonparaxial` command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;
mod validate;

use config::{CommandKind, Overrides};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "nonparaxial", version, about = "Quartic-corrected beam propagation: fields, kernels, bounds and scans")]
struct Cli {
    /// TOML configuration file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Check the configuration and print a report without computing.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Print failures as JSON on stdout.
    #[arg(long, global = true)]
    error_json: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Propagate a Gaussian packet and write field snapshots.
    Propagate,
    /// Tabulate the propagation kernel over (dx, dt).
    Kernel,
    /// Momentum bound, positivity radius and minimal wavelength.
    Bounds,
    /// Roots of the quartic mode equation.
    Modes,
    /// Euclidean saddle velocity and real-time momentum.
    Instanton,
    /// Geometric phases around x and z loops.
    Berry,
    /// Smallest eps at which the first-order density turns negative.
    ScanNegativity,
    /// Kernel-vs-spectral error over an eps sweep.
    Compare,
}

impl From<Cmd> for CommandKind {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Propagate => CommandKind::Propagate,
            Cmd::Kernel => CommandKind::Kernel,
            Cmd::Bounds => CommandKind::Bounds,
            Cmd::Modes => CommandKind::Modes,
            Cmd::Instanton => CommandKind::Instanton,
            Cmd::Berry => CommandKind::Berry,
            Cmd::ScanNegativity => CommandKind::ScanNegativity,
            Cmd::Compare => CommandKind::Compare,
        }
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let text = match &cli.config {
        Some(path) => config::load_file(path)?,
        None => String::new(),
    };
    let cfg = config::resolve(cli.command.map(Into::into), &text, &cli.overrides)?;
    let report = validate::validate(&cfg);
    if cli.dry_run {
        emit(&serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    let errors = report.errors();
    if !errors.is_empty() {
        return Err(if report.only_numerical_errors() {
            CliError::Numerical(errors.join("; "))
        } else {
            CliError::Config(errors)
        });
    }
    let mut out = output::Artifacts::new(&cfg)?;
    out.warnings.extend(report.warnings());
    let outcome = commands::run(&cfg, &mut out)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let sidecar = out.finish(&cfg, &outcome.results)?;
    if outcome.echo {
        emit(&serde_json::to_string_pretty(&outcome.results).expect("results serialize"));
    }
    eprintln!("wrote {}", sidecar.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.error_json {
                emit(&e.to_json().to_string());
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
