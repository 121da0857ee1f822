//! Command-line front end: argument parsing, input resolution and the
//! subcommands. `main` only prints what [`run`] returns.

mod commands;
pub mod input;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metricforge_core::Error;
use serde::Serialize;

/// Stable exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const BROKEN_PHASE: i32 = 2;
    pub const DEFECTIVE: i32 = 3;
    pub const PARSE: i32 = 4;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    pub exit: i32,
}

impl CliError {
    pub fn new(code: &str, message: String, exit: i32) -> Self {
        CliError {
            code: code.into(),
            message,
            exit,
        }
    }

    pub fn parse(message: String) -> Self {
        CliError::new("parse_error", message, exit::PARSE)
    }

    pub fn io(message: String) -> Self {
        CliError::new("io_error", message, exit::FAILURE)
    }

    /// Body written to stderr.
    pub fn to_json(&self) -> String {
        output::to_compact(&serde_json::json!({ "error": self, "exit_code": self.exit }))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::BrokenPhase { .. } => exit::BROKEN_PHASE,
            Error::DefectiveSystem { .. } | Error::DefectiveMatrix { .. } => exit::DEFECTIVE,
            Error::InvalidParams(_)
            | Error::NotSquare { .. }
            | Error::NonFinite { .. }
            | Error::DimensionMismatch { .. } => exit::PARSE,
            _ => exit::FAILURE,
        };
        CliError::new(e.code(), e.to_string(), exit)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "metricforge",
    version,
    about = "Metric operators for pseudo-Hermitian Hamiltonians",
    long_about = None
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// JSON input document with a `model` or `matrix` block.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Model family: jc_doublet, jc_full, pt_matrix, dirac_scalar.
    #[arg(long)]
    model: Option<String>,
    /// Model parameters, `name=value,...`.
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    #[arg(long)]
    model: String,
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Tolerance override `name=value`; repeatable.
    #[arg(long, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Directory for result.json and CSV files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Spectral,
    Das,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the metric by the spectral method, the generator method, or both.
    Metric {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "spectral")]
        method: Method,
        /// unit_left, unit_right or balanced (default: the model's own).
        #[arg(long)]
        normalization: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Report phase, pseudo-Hermiticity and metric validity.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        normalization: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare the available metrics against the spectral one.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        normalization: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Classify a parameter grid and report phase boundaries.
    Sweep {
        #[command(flatten)]
        family: FamilyArgs,
        /// `name=start:stop:count`; repeatable, first axis varies slowest.
        #[arg(long, required = true, allow_hyphen_values = true)]
        axis: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Locate an exceptional point in one parameter by bisection.
    Ep {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evolve a state and track its norms.
    Evolve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        /// Initial state: `1,0`, `[1,0]`, `[[re,im],...]` or `growing` for the
        /// eigenmode with the largest Im E (default: first basis vector).
        #[arg(long, allow_hyphen_values = true)]
        psi0: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        /// Run outside the unbroken phase, tracking the standard norm only.
        #[arg(long)]
        allow_broken: bool,
        #[arg(long)]
        normalization: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Overlaps of two nearly parallel entangled states under the metric.
    Discriminate {
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
        eps: f64,
        /// Comma-separated sin(theta) values for the doublet metric block.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "model")]
        sin_theta: Option<String>,
        /// Take the metric from a spin-oscillator model instead.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, allow_hyphen_values = true, requires = "model")]
        params: Option<String>,
        /// Also scan theta over [0, pi/2] with this many points.
        #[arg(long)]
        scan: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Model utilities.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
}

#[derive(Debug, Subcommand)]
enum ModelCommand {
    /// Print a model's matrices and closed-form data.
    Show {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Run one invocation. `args` includes the program name. Returns the text
/// for stdout.
pub fn run<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(e.to_string()),
                _ => Err(CliError::parse(e.to_string().trim_end().to_string())),
            };
        }
    };
    let echo: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    commands::dispatch(cli.command, echo)
}
