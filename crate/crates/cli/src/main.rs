//! `fracverify`: command-line front-end for the fractional Laplacian verifiers.
//!
//! Exit codes: 0 PASS/HOLDS, 1 FAIL/FAILS, 2 INCONCLUSIVE, 3 usage or configuration error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "fracverify", version, about = "Numerical verification of fractional Laplacian estimates and Liouville-type nonexistence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Json, global = true)]
    pub out: OutFormat,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-8, global = true)]
    pub tol: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Dims {
    /// Dimension n ∈ {1, 2, 3}.
    #[arg(long)]
    pub n: Option<usize>,
    /// Order s ∈ (0, 1).
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct NonlinearityArgs {
    /// JSON file holding a nonlinearity specification.
    #[arg(long, conflicts_with = "p")]
    pub spec: Option<PathBuf>,
    /// Shortcut for the pure power f(t) = t^p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Base radius r0 used with --p.
    #[arg(long, default_value_t = 2.0)]
    pub r0: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate (-Δ)^s of a radial profile at given radii.
    Eval {
        #[command(flatten)]
        dims: Dims,
        /// phi, phi_tilde, power:<b>, cap:<p>, bracket:<p>:<w>, or a barrier name.
        #[arg(long)]
        profile: String,
        /// Radii (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        at: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        r0: f64,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Sample a barrier and its operator, with unit or automatically chosen constants.
    Barrier {
        #[command(flatten)]
        dims: Dims,
        /// Barrier name, e.g. psi_g or h_hat.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 2.0)]
        r0: f64,
        #[arg(long)]
        r: Option<f64>,
        /// Choose the free constants with the owning sign chain.
        #[arg(long)]
        auto: bool,
        /// Radii (comma separated); defaults to --samples points on (r0, 2r).
        #[arg(long, value_delimiter = ',')]
        at: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Verify one estimate chain.
    VerifyChain {
        /// Chain name, e.g. lvc or ca3d.
        #[arg(long)]
        chain: String,
        #[command(flatten)]
        dims: Dims,
        #[arg(long, default_value_t = 2.0)]
        r0: f64,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Use unit constants instead of the automatic choice.
        #[arg(long)]
        unit_constants: bool,
    },
    /// Solve the 1D Dirichlet problem (-Δ)^s v = h in Ω, v = 0 outside.
    Solve {
        /// Order s ∈ (0, 1).
        #[arg(long)]
        s: f64,
        /// Grid spacing.
        #[arg(long, default_value_t = 1.0 / 64.0)]
        h: f64,
        /// Interval endpoints a1,b1,a2,b2,...
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, 1.0])]
        domain: Vec<f64>,
        /// Constant right-hand side.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        rhs: f64,
        /// Restrict the right-hand side to these intervals a1,b1,...
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        indicator: Vec<f64>,
    },
    /// Run one maximum-principle verifier on its default example.
    Maxprinciple {
        #[arg(long, value_enum)]
        check: MpCheck,
        /// Order s; defaults to 0.75 for qsmp2 (Φ̃ must be finite and positive) and 0.5 otherwise.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Number of random pairs for the comparison battery.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Sample a hypothesis on the nonlinearity.
    CheckF {
        #[arg(long, value_enum)]
        condition: Condition,
        #[command(flatten)]
        dims: Dims,
        #[command(flatten)]
        f: NonlinearityArgs,
    },
    /// Supersolution residual scan over a bracket candidate family.
    Scan {
        #[command(flatten)]
        dims: Dims,
        #[command(flatten)]
        f: NonlinearityArgs,
        /// Grid points per family axis (c and β).
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Add the ε|x|^{-τ} control member for this power.
        #[arg(long)]
        control: Option<f64>,
    },
    /// Trace m(r), its lower bound and envelope along a radius grid.
    Trace {
        #[command(flatten)]
        dims: Dims,
        #[command(flatten)]
        f: NonlinearityArgs,
        /// Grid spacing of the solver runs that fix c̄ and C̄.
        #[arg(long, default_value_t = 1.0 / 32.0)]
        h: f64,
    },
    /// Verify every chain at its default parameters and the exponent presets.
    Report {
        #[arg(long, default_value_t = 60)]
        samples: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpCheck {
    Comparison,
    Hopf,
    Kslap,
    Qsmp1,
    Qsmp2,
    Measure,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    F2,
    F2prime,
    F3prime,
    F4prime,
}

/// Outcome of a command, mapped to the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }
    }
}

const USAGE_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE_ERROR),
            };
        }
    };
    match commands::run(&cli) {
        Ok((text, status)) => {
            print!("{text}");
            ExitCode::from(status.code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
