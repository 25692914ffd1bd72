use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "gdcert", version, about = "Certified convergence rates for inexact gradient descent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify one spec; with --rho, decide whether that rate is certified.
    Certify(CertifyArgs),
    /// Certify every spec of a parameter grid and write a CSV table.
    Sweep(SweepArgs),
    /// Run inexact gradient descent and compare with the certificate.
    Simulate(SimulateArgs),
    /// Cross-check a certificate end to end.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    #[arg(long)]
    pub m: f64,
    #[arg(long = "L")]
    pub l: f64,
    #[arg(long, conflicts_with = "alpha_frac", required_unless_present = "alpha_frac")]
    pub alpha: Option<f64>,
    /// Step size as a multiple of 2/(L+m).
    #[arg(long)]
    pub alpha_frac: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Function class: sector or strongly-convex.
    #[arg(long, default_value = "strongly-convex")]
    pub class: String,
}

impl SpecArgs {
    pub fn alpha(&self) -> f64 {
        match (self.alpha, self.alpha_frac) {
            (Some(a), _) => a,
            (None, Some(f)) => f * 2.0 / (self.l + self.m),
            (None, None) => unreachable!("clap requires one of --alpha and --alpha-frac"),
        }
    }
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Decision mode: is this rate certified?
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<f64>,
    #[arg(long = "L", value_delimiter = ',')]
    pub l: Vec<f64>,
    #[arg(long, value_delimiter = ',', conflicts_with = "alpha_frac")]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_frac: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    #[arg(long)]
    pub class: Option<String>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value = "quadratic-L")]
    pub function: String,
    #[arg(long, default_value = "greedy")]
    pub policy: String,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Starting point; defaults to the minimizer shifted by one in every coordinate.
    #[arg(long, value_delimiter = ',')]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectory CSV path.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}
