use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dustcoal::MeasureSpec;

/// Simulate simple Λ-coalescents with dust and verify their laws.
#[derive(Debug, Parser)]
#[command(name = "dustcoal", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print μ₋₁, μ₋₂, γ, α and the jump rates of the measure.
    MeasureInfo,
    /// Simulate the jump chain of f1 for each replicate.
    SimulateF1(SimulateF1Args),
    /// Coupled samples of the minimal clade size M_n and f1[1].
    Mcs(McsArgs),
    /// Exact law of f1[1] for a Dirac measure with rational atom.
    ExactDirac(ExactArgs),
    /// Run the full verification suite; exit 1 if any check fails.
    Verify,
    /// Closed-form and simulated non-Markov event probabilities.
    Nonmarkov(NonmarkovArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Measure: dirac:<p>, beta:<a>:<b>[:<mass>] or atoms:<p>,<w>;...
    #[arg(long, global = true, default_value = "dirac:1/2", value_parser = parse_measure)]
    pub measure: MeasureSpec,
    /// Run seed; falls back to DUSTCOAL_SEED, then 0.
    #[arg(long, global = true, env = "DUSTCOAL_SEED")]
    pub seed: Option<u64>,
    /// Replicates (per check for verify).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads (default: one per core). Output does not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Bound on |z| for Monte Carlo checks.
    #[arg(long, global = true, default_value_t = 4.0, value_parser = parse_positive)]
    pub zmax: f64,
}

#[derive(Debug, Args)]
pub struct SimulateF1Args {
    /// Jumps of f1 per replicate.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub jumps: u64,
}

#[derive(Debug, Args)]
pub struct McsArgs {
    /// Sample sizes, comma separated and increasing.
    #[arg(long = "n", value_delimiter = ',', default_value = "100,1000,10000", value_parser = clap::value_parser!(u64).range(2..))]
    pub n: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Largest merger index of the first jump enumerated.
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
}

#[derive(Debug, Args)]
pub struct NonmarkovArgs {
    /// Start of the window where f1 must be 0; two comma-separated values
    /// also report the difference between them.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub t0: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub t1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn parse_measure(text: &str) -> Result<MeasureSpec, String> {
    MeasureSpec::parse(text).map_err(|e| e.to_string())
}

fn parse_positive(text: &str) -> Result<f64, String> {
    match text.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got `{text}`")),
    }
}
