//! Command-line front end: pair generation, spectral shift computation by
//! any of the three methods, trace-formula verification, norm estimation,
//! derivative checks, and winding profiles.
//!
//! Exit codes: 0 success/pass, 1 verification failure, 2 invalid inputs,
//! 3 method/kind mismatch.

mod commands;
mod output;
mod pair;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::OutputFormat;
use pair::PairKind;

#[derive(Parser)]
#[command(
    name = "specshift",
    version,
    about = "Spectral shift functions, trace-formula verification, and operator-Lipschitz norm bounds for matrix pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    globals: Globals,
}

#[derive(Args, Debug, Clone)]
struct Globals {
    /// Seed for every random draw; identical seeds give byte-identical output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Base tolerance for verification reports.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Gauss-Legendre node count for the path method.
    #[arg(long, global = true, default_value_t = 64)]
    quad_nodes: usize,
    /// Highest Fourier coefficient order computed.
    #[arg(long, global = true, default_value_t = 32)]
    fourier_order: usize,
    /// Random trial count for the norm estimators.
    #[arg(long, global = true, default_value_t = 200)]
    trials: usize,
    /// Write the primary output to this file (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output encoding where both are supported.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
}

impl Globals {
    fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err("--tol must satisfy 0 < tol < 1".into());
        }
        if self.quad_nodes < 2 {
            return Err("--quad-nodes must be at least 2".into());
        }
        if self.fourier_order < 1 {
            return Err("--fourier-order must be at least 1".into());
        }
        if self.trials < 1 {
            return Err("--trials must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone)]
struct FunctionArgs {
    /// Function spec JSON, inline.
    #[arg(long, conflicts_with = "function_file")]
    function: Option<String>,
    /// Function spec JSON, from a file.
    #[arg(long)]
    function_file: Option<PathBuf>,
}

impl FunctionArgs {
    fn text(&self) -> Result<String, String> {
        match (&self.function, &self.function_file) {
            (Some(inline), None) => Ok(inline.clone()),
            (None, Some(path)) => {
                std::fs::read_to_string(path).map_err(|e| format!("cannot read function spec: {e}"))
            }
            _ => Err("exactly one of --function or --function-file is required".into()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded pair file: V = e^{iA}U for unitary pairs,
    /// B = A + K for Hermitian pairs.
    GenPair {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = PairKind::Unitary)]
        kind: PairKind,
        /// Operator norm of the perturbation generator.
        #[arg(long)]
        scale: f64,
        /// Rank of the perturbation generator.
        #[arg(long, default_value_t = 1)]
        rank: usize,
    },
    /// Compute the spectral shift function of a unitary pair.
    Ssf {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, value_enum)]
        method: commands::SsfMethod,
    },
    /// Verify the trace formula for a pair against a function spec.
    Verify {
        #[arg(long)]
        pair: PathBuf,
        #[command(flatten)]
        function: FunctionArgs,
    },
    /// Operator-Lipschitz norm sandwich across dimensions.
    Lipnorm {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
    },
    /// Finite-difference check of the derivative formula.
    DerivativeCheck {
        /// Pair file supplying (U, A) via A = log(V U*) for unitary pairs,
        /// or (A, K) via K = V - U for Hermitian pairs.
        #[arg(long, conflicts_with_all = ["dim", "kind", "scale"])]
        pair: Option<PathBuf>,
        /// Generate the inputs instead of loading a pair.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_enum, default_value_t = PairKind::Unitary)]
        kind: PairKind,
        /// Operator norm of the generated perturbation direction.
        #[arg(long, default_value_t = 0.25)]
        scale: f64,
        #[command(flatten)]
        function: FunctionArgs,
        /// Comma-separated decreasing step sizes.
        #[arg(long, default_value = "1e-2,1e-3,1e-4", value_delimiter = ',')]
        t_list: Vec<f64>,
    },
    /// Dual evaluation of z -> trace(f(zU) - f(zV)) around the circle.
    Profile {
        #[arg(long)]
        pair: PathBuf,
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value_t = 360)]
        grid: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = cli.globals.validate() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    };
    ExitCode::from(code)
}

/// Error with the exit code it maps to.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn mismatch(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let globals = &cli.globals;
    match cli.command {
        Command::GenPair {
            dim,
            kind,
            scale,
            rank,
        } => commands::cmd_gen_pair(globals, dim, kind, scale, rank),
        Command::Ssf { pair, method } => commands::cmd_ssf(globals, &pair, method),
        Command::Verify { pair, function } => {
            let spec = function.text().map_err(CliError::invalid)?;
            commands::cmd_verify(globals, &pair, &spec)
        }
        Command::Lipnorm { function, dims } => {
            let spec = function.text().map_err(CliError::invalid)?;
            commands::cmd_lipnorm(globals, &spec, &dims)
        }
        Command::DerivativeCheck {
            pair,
            dim,
            kind,
            scale,
            function,
            t_list,
        } => {
            let spec = function.text().map_err(CliError::invalid)?;
            commands::cmd_derivative_check(globals, pair.as_deref(), dim, kind, scale, &spec, &t_list)
        }
        Command::Profile {
            pair,
            function,
            grid,
        } => {
            let spec = function.text().map_err(CliError::invalid)?;
            commands::cmd_profile(globals, &pair, &spec, grid)
        }
    }
}
