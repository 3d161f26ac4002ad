//! `lsfiber`: solve, trace and count solutions of `-u'' - f(u) = g` on a grid.
//!
//! Exit codes: 0 success, 1 configuration error, 2 eigenvalue on the band
//! boundary, 3 no solution in range, 4 solver failure, 5 gallery
//! verification failure, 6 oracle disagreement.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{config_error, Failure, Outcome};
use crate::config::{Problem, RunConfig};

#[derive(Parser)]
#[command(name = "lsfiber", version, about = "Fiber solver for semilinear Dirichlet problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the decomposition for the configured band.
    Info(RunArgs),
    /// Enumerate solutions on the fiber.
    Solve(RunArgs),
    /// Sample the fiber and its height map.
    Trace(RunArgs),
    /// Count solutions of F(u) = g - s phi_1 over shift values s.
    Scan(RunArgs),
    /// Multistart Newton on the full system; compares with a solve run in the same directory.
    Oracle(RunArgs),
    /// Build and verify an explicit degenerate instance.
    Gallery {
        #[command(subcommand)]
        preset: GalleryCmd,
        /// Run directory.
        #[arg(long, short, default_value = "run", global = true)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Run directory.
    #[arg(long, short, default_value = "run")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

/// Flags that override config values.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Nodes per direction.
    #[arg(long)]
    pub n: Option<usize>,
    /// Lower band end.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Upper band end.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub gap_tol: Option<f64>,
    /// Picard tolerance for traces.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Lower corner of the scanned t-box, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t_min: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t_max: Option<Vec<f64>>,
    /// Samples per fiber direction for the root scan.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Trace samples per fiber direction.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_starts: Option<usize>,
    #[arg(long)]
    pub box_scale: Option<f64>,
    /// Sine amplitudes of g, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rhs_coefficients: Option<Vec<f64>>,
    /// Shift values for `scan`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub s: Vec<f64>,
    /// Add fold values of the base right-hand side to the scan.
    #[arg(long)]
    pub include_folds: bool,
}

#[derive(Subcommand, Debug)]
pub enum GalleryCmd {
    /// Segment of solutions t phi_1, t in [0, 1].
    Flat {
        #[arg(long, default_value_t = 199)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
    },
    /// Half-line of solutions built from sine arcs.
    Halfline {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2.56)]
        a: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [199, 399, 799])]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 5.0])]
        ps: Vec<f64>,
    },
    /// sin(x) times the half-line profile on a square.
    Separable2d {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2.56)]
        a: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [49, 99, 199])]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        ps: Vec<f64>,
    },
    /// Vanishing second-mode component on a symmetric interval.
    Symmetric {
        #[arg(long, default_value_t = 199)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 0.3)]
        e0: f64,
    },
}

fn problem(args: &RunArgs) -> Result<Problem, Failure> {
    let mut config = RunConfig::load(args.config.as_deref()).map_err(config_error)?;
    config.apply(&args.overrides).map_err(config_error)?;
    Problem::new(config).map_err(config_error)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Info(args) => commands::info(problem(&args)?, &args.out),
        Command::Solve(args) => commands::solve_cmd(problem(&args)?, &args.out),
        Command::Trace(args) => commands::trace(problem(&args)?, &args.out),
        Command::Scan(args) => commands::scan(problem(&args)?, &args.out),
        Command::Oracle(args) => commands::oracle(problem(&args)?, &args.out),
        Command::Gallery { preset, out } => commands::gallery(&preset, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
