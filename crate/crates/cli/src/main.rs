//! `dilab`: command-line front end for the dilation laboratory.
//!
//! Exit codes: 0 when every selected check passes, 1 when at least one fails,
//! 2 on usage, validation or I/O errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "dilab", version, about = "Regular unitary dilation checks for commuting semigroup families")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Family specification (JSON).
    #[arg(long, global = true, env = "DILAB_SPEC")]
    pub spec: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, env = "DILAB_OUT")]
    pub out: Option<PathBuf>,
    /// Directory for CSV tables.
    #[arg(long, global = true, env = "DILAB_CSV")]
    pub csv: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long, global = true, env = "DILAB_SEED")]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long = "mc-n", global = true, env = "DILAB_MC_N")]
    pub mc_n: Option<u64>,
    /// Relative PSD tolerance.
    #[arg(long = "tol-psd", global = true, env = "DILAB_TOL_PSD")]
    pub tol_psd: Option<f64>,
    /// Largest time on the t axis.
    #[arg(long = "grid-max", global = true, env = "DILAB_GRID_MAX")]
    pub grid_max: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true, env = "DILAB_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the equivalence battery on --spec.
    Analyze {
        /// Also rerun the battery on every proper subfamily.
        #[arg(long)]
        subsets: bool,
        /// Enable the Monte Carlo transfer column.
        #[arg(long)]
        transfer: bool,
    },
    /// Convergence tables and expectation identities for the generators of --spec.
    Approximants {
        /// Approximant rates.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 8.0, 32.0])]
        rates: Vec<f64>,
        /// Times for the Monte Carlo identity.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 2.0])]
        times: Vec<f64>,
    },
    /// Sample a distribution semigroup and compare moments and characteristic function.
    Stochastic {
        #[arg(long, value_enum)]
        law: Law,
        /// Rate λ of the Poisson laws.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Drift and diffusion of the Gaussian law.
        #[arg(long, default_value_t = 0.0)]
        drift: f64,
        #[arg(long, default_value_t = 1.0)]
        diffusion: f64,
        #[arg(long)]
        t: f64,
        /// Sample count; overrides --mc-n.
        #[arg(long)]
        n: Option<u64>,
        /// Frequencies for the characteristic function.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])]
        omega: Vec<f64>,
    },
    /// Build the block counterexample and confirm its sharpness.
    Counterexample {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 4)]
        dim1: usize,
        #[arg(long, default_value_t = 2)]
        dim2: usize,
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        /// Seed of the random isometries.
        #[arg(long = "family-seed", default_value_t = 0)]
        family_seed: u64,
        /// Write the matching family spec here.
        #[arg(long)]
        emit_spec: Option<PathBuf>,
    },
    /// Positivity-structure axioms, or the CCR checks when --spec holds a ccr source.
    Monoid {
        #[arg(long, value_enum, default_value_t = Variant::Heisenberg)]
        variant: Variant,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Seeded mutations to test for detection.
        #[arg(long, default_value_t = 5)]
        mutations: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    Dirac,
    ScaledPoisson,
    AuxPoisson,
    Gaussian,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Euclidean,
    Heisenberg,
    HeisenbergC,
    Product,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dilab: {e}");
            ExitCode::from(2)
        }
    }
}
