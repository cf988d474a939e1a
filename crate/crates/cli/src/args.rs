use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finestrat::{Design, KeyMode, Scenario};

#[derive(Debug, Parser)]
#[command(name = "finestrat", version, about = "Variance estimation under fine stratification")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file for the main table (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads for replicate-level parallelism.
    #[arg(long, global = true, env = "FINESTRAT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic population as `stratum,x,y`.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Draw one stratified sample from a population file.
    Sample(SampleArgs),
    /// Estimate the variance of the HT mean from one sample.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo study described by a spec file.
    Simulate(SimulateArgs),
    /// Grid search for the half-t scale `d`.
    #[command(name = "select-d")]
    SelectD(SelectDArgs),
    /// Summarize MCMC trace files.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Gaussian super-population with one of seven mean functions.
    Gaussian {
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        #[arg(long)]
        phi: f64,
        /// Number of strata.
        #[arg(long = "H", default_value_t = 50)]
        strata: usize,
        /// Units per stratum.
        #[arg(long = "Nh", default_value_t = 60)]
        stratum_size: usize,
    },
    /// Gamma population stratified into equal-x-total strata.
    Hmt {
        #[arg(long = "N", default_value_t = 2000)]
        size: usize,
        #[arg(long = "H", default_value_t = 20)]
        strata: usize,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long)]
        x_shape: Option<f64>,
        #[arg(long)]
        x_scale: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Units drawn per stratum (capped at the stratum size).
    #[arg(long, default_value_t = 1)]
    pub psus: usize,
    #[arg(long, value_parser = parse_design, default_value = "srswor")]
    pub design: Design,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub population: PathBuf,
    #[command(flatten)]
    pub design: DesignArgs,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Comma-separated subset of coll,ker,dir,hb.
    #[arg(long, default_value = "coll,ker,dir,hb")]
    pub estimators: String,
    /// Kernel bandwidth.
    #[arg(long, default_value_t = 1.0 / 40.0)]
    pub b: f64,
    #[arg(long, value_parser = parse_key_mode, default_value = "rank")]
    pub key_mode: KeyMode,
    /// Half-t scale of the HB prior.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    #[arg(long, default_value_t = 8)]
    pub zeta_threshold: usize,
    #[arg(long, default_value_t = 25_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 100)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
}

#[derive(Debug, Args)]
#[group(id = "input", required = true, multiple = false)]
pub struct InputArgs {
    /// Population file; a sample is drawn from it with --seed.
    #[arg(long, group = "input")]
    pub population: Option<PathBuf>,
    /// Sample file `stratum,x,stratum_size,unit,y`.
    #[arg(long, group = "input")]
    pub sample: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub estimators: EstimatorArgs,
    /// Diagnostics sidecar (defaults to `<out>.diagnostics.json`).
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Write the HB trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Include wall-clock runtime in the sidecar.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Override the replicate count.
    #[arg(long = "R")]
    pub replicates: Option<usize>,
    /// Per-replicate results CSV.
    #[arg(long)]
    pub results: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectDArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// `start:stop:count` (evenly spaced) or a comma-separated list.
    #[arg(long)]
    pub grid: String,
    /// Space a `start:stop:count` grid geometrically.
    #[arg(long)]
    pub log: bool,
    #[arg(long = "R", default_value_t = 50)]
    pub replicates: usize,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Trace CSV file or a directory of them.
    #[arg(long)]
    pub traces: PathBuf,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: finestrat::Error| e.to_string())
}

fn parse_design(s: &str) -> Result<Design, String> {
    s.parse().map_err(|e: finestrat::Error| e.to_string())
}

fn parse_key_mode(s: &str) -> Result<KeyMode, String> {
    s.parse().map_err(|e: finestrat::Error| e.to_string())
}
