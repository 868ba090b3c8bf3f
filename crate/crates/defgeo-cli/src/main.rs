//! Command-line front end for the deformation-geometry library.
//!
//! Four verbs cover the workflows the library supports:
//!
//! - `evaluate <config.toml>`: sweep a declarative geometry over its grid
//!   and tabulate the requested quantities per point;
//! - `verify <scenario>`: compare a built-in example family against its
//!   independently coded closed forms;
//! - `recover <reference.toml> <deformed.toml>`: reconstruct the pure
//!   deformation carrying one metric into another;
//! - `list-scenarios`: enumerate the built-in families.
//!
//! Reports go to stdout (or `--out`) as CSV or JSON; a human-readable
//! pass/fail summary goes to stderr. Exit codes: 0 on success, 1 when an
//! identity check fails, 2 for configuration problems, 3 for numerical
//! failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use defgeo::config::{GeometryConfig, MetricDocument, SchemeSection};
use defgeo::driver::{self, RunError};
use defgeo::report::Report;

#[derive(Parser)]
#[command(
    name = "defgeo",
    version,
    about = "Deformation geometry: deformed metrics, rate tensors, and the connections they induce"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a geometry configuration over its grid and tabulate quantities.
    Evaluate {
        /// Path to a TOML geometry configuration.
        config: PathBuf,
        /// Override the configured differentiation scheme.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Override the finite-difference step size.
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check a built-in scenario against its closed forms.
    Verify {
        /// Scenario name (see `list-scenarios`).
        scenario: String,
        /// Grid points per axis for the comparison sweep.
        #[arg(long, default_value_t = 21)]
        resolution: usize,
        /// Differentiation scheme for the pipeline under test.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Finite-difference step size.
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Recover the pure deformation carrying one metric document into another.
    Recover {
        /// TOML document with the reference metric.
        reference: PathBuf,
        /// TOML document with the deformed metric, on the same chart.
        deformed: PathBuf,
        /// Grid points per axis.
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List the built-in scenarios.
    ListScenarios,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Copy, Clone, ValueEnum)]
enum SchemeArg {
    Analytic,
    Central,
    Richardson,
}

impl SchemeArg {
    fn mode(self) -> &'static str {
        match self {
            SchemeArg::Analytic => "analytic",
            SchemeArg::Central => "central",
            SchemeArg::Richardson => "richardson",
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, output) = match cli.command {
        Command::Evaluate {
            config,
            scheme,
            step,
            output,
        } => (evaluate(&config, scheme, step), output),
        Command::Verify {
            scenario,
            resolution,
            scheme,
            step,
            output,
        } => (verify(&scenario, resolution, scheme, step), output),
        Command::Recover {
            reference,
            deformed,
            grid,
            output,
        } => (recover(&reference, &deformed, grid), output),
        Command::ListScenarios => {
            return match driver::list_scenarios() {
                Ok(listing) => {
                    print!("{listing}");
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::from(driver::exit_code(&Err(err)) as u8)
                }
            };
        }
    };

    let code = driver::exit_code(&result) as u8;
    match result {
        Ok(report) => {
            if let Err(message) = emit(&report, &output) {
                eprintln!("error: {message}");
                return ExitCode::from(2);
            }
            for line in report.summary_lines() {
                eprintln!("{line}");
            }
        }
        Err(err) => eprintln!("error: {err}"),
    }
    ExitCode::from(code)
}

fn evaluate(path: &Path, scheme: Option<SchemeArg>, step: Option<f64>) -> Result<Report, RunError> {
    let text = read(path)?;
    let mut config = GeometryConfig::from_toml_str(&text)
        .map_err(|err| RunError::config(format!("{}: {err}", path.display())))?;
    if let Some(mode) = scheme {
        config.scheme = SchemeSection {
            mode: mode.mode().to_string(),
            step: None,
            levels: None,
        };
    }
    if let Some(h) = step {
        config.scheme.step = Some(h);
    }
    driver::run_evaluate(&config)
}

fn verify(
    scenario: &str,
    resolution: usize,
    scheme: Option<SchemeArg>,
    step: Option<f64>,
) -> Result<Report, RunError> {
    let section = SchemeSection {
        mode: scheme.unwrap_or(SchemeArg::Analytic).mode().to_string(),
        step,
        levels: None,
    };
    let scheme = driver::scheme_from_section(&section)?;
    driver::run_verify(scenario, resolution, scheme)
}

fn recover(reference: &Path, deformed: &Path, grid: usize) -> Result<Report, RunError> {
    let gbar = read_metric_document(reference)?;
    let g = read_metric_document(deformed)?;
    driver::run_recover(&gbar, &g, grid)
}

fn read(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path)
        .map_err(|err| RunError::config(format!("cannot read {}: {err}", path.display())))
}

fn read_metric_document(path: &Path) -> Result<MetricDocument, RunError> {
    MetricDocument::from_toml_str(&read(path)?)
        .map_err(|err| RunError::config(format!("{}: {err}", path.display())))
}

fn emit(report: &Report, output: &OutputArgs) -> Result<(), String> {
    let mut body = match output.format {
        FormatArg::Csv => report.to_csv(),
        FormatArg::Json => report.to_json(),
    };
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match &output.out {
        Some(path) => {
            fs::write(path, body).map_err(|err| format!("cannot write {}: {err}", path.display()))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
