//! `wbary`: Wasserstein barycenters of Gaussian measures from the command line.

/// `println!` that ignores a closed standard output (e.g. piped into `head`).
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// `print!` counterpart of [`outln`].
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

mod commands;
mod error;
mod input;
mod oracle;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wbary::benchmark::BenchConfig;
use wbary::fixpoint::{DEFAULT_MAX_ITER, DEFAULT_RESIDUAL_TOL, DEFAULT_TOL};
use wbary::Variant;

use commands::{RandomSpec, SolverOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ORACLE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_MATH: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  oracle-check found a failing case
  2  unreadable input, parse error or invalid flags
  3  math error (non-PSD covariance, no positive definite covariance, singular matrix)
  4  no convergence (the result is still printed)

Environment:
  WBARY_TOL  default for --tol";

#[derive(Parser)]
#[command(name = "wbary", version, about, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// W2 distance and optimal map between the two measures of a file.
    Distance { file: PathBuf },
    /// Barycenter of the measures of a problem file, as JSON.
    Barycenter {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the per-step trace as CSV.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Iteration counts on random Wishart problems, as CSV.
    Bench(BenchArgs),
    /// Log-decrease series of the target function, with a linear fit.
    Logdecay {
        /// Problem file; alternatively use --random.
        file: Option<PathBuf>,
        /// Random Wishart problem, e.g. `d=5,k=5,seed=3`.
        #[arg(long, conflicts_with = "file")]
        random: Option<RandomSpec>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the series CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized cross-checks of the solvers against independent oracles.
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Offset added to every solver output (negative control).
        #[arg(long, default_value_t = 0.0, hide = true)]
        perturb: f64,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Stop once V decreases by less than this.
    #[arg(long, env = "WBARY_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// `paper` or `ru`.
    #[arg(long, default_value = "paper")]
    variant: Variant,
    /// Starting point: `identity`, `first`, or row-major entries.
    #[arg(long, default_value = "identity")]
    s0: String,
    /// Bound on ‖H(S) − Id‖_F required for convergence.
    #[arg(long, default_value_t = DEFAULT_RESIDUAL_TOL)]
    residual_tol: f64,
    /// Stop at the ΔV rule without refining the residual.
    #[arg(long)]
    no_polish: bool,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            variant: self.variant,
            s0: self.s0.clone(),
            residual_tol: self.residual_tol,
            no_polish: self.no_polish,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,5,10")]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    ks: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "paper,ru")]
    variants: Vec<Variant>,
    #[arg(long, env = "WBARY_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Run replicates on one thread.
    #[arg(long)]
    serial: bool,
    /// Write the CSV here; the summary then goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl BenchArgs {
    fn config(&self) -> BenchConfig {
        BenchConfig {
            dims: self.dims.clone(),
            ks: self.ks.clone(),
            replicates: self.replicates,
            seed: self.seed,
            tol: self.tol,
            variants: self.variants.clone(),
            max_iter: self.max_iter,
            parallel: !self.serial,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Distance { file } => commands::distance(file),
        Command::Barycenter {
            file,
            solver,
            trace_out,
        } => commands::barycenter(file, &solver.options(), trace_out.as_deref()),
        Command::Bench(args) => commands::bench(&args.config(), args.out.as_deref()),
        Command::Logdecay {
            file,
            random,
            solver,
            out,
        } => commands::logdecay(file.as_ref(), *random, &solver.options(), out.as_deref()),
        Command::OracleCheck { cases, seed, perturb } => oracle::oracle_check(*cases, *seed, *perturb),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
