use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "tailindex", version, about = "Entropy index of upper-tail interdependence")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "TAILINDEX_OUT_DIR", default_value = "tailindex-out")]
    pub out_dir: PathBuf,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Index curves of a CSV panel.
    Index(IndexArgs),
    /// GARCH filter, model fits, Monte Carlo envelopes and exceedance report.
    Pipeline(PipelineArgs),
    /// Extremal coefficients and index convergence for Gumbel / Student models.
    Extremal(ExtremalArgs),
    /// Draw a sample from a model.
    Simulate(SimulateArgs),
    /// Fit one dependence model.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV with a header row; a leading date column is detected and skipped.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, default_value = ",")]
    pub delimiter: char,

    /// Columns to use, by 1-based position or header name (default: all).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,

    /// Tie rule for ranks: average, min, max or random:SEED.
    #[arg(long, default_value = "average")]
    pub ties: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Prices,
    Returns,
    /// Use the values as they are.
    Observations,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// `start:stop:step` or a comma list.
    #[arg(long, default_value = ".850:.995:.005")]
    pub grid: String,

    /// Component subsets such as `1,2/1,2,3`, positions within the selected columns.
    #[arg(long, default_value = "leading")]
    pub subsets: String,

    /// Also write Tsallis indices for these α (each > 1).
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum ModelName {
    Gaussian,
    Student,
    Mixture,
}

impl ModelName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Gaussian => "gaussian",
            ModelName::Student => "student",
            ModelName::Mixture => "mixture",
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "prices")]
    pub input_kind: InputKind,

    /// Skip the GARCH(1,1) filter and use returns directly.
    #[arg(long)]
    pub no_garch: bool,

    /// Fix the GARCH mean at zero.
    #[arg(long)]
    pub zero_mean: bool,

    #[arg(long, value_enum, value_delimiter = ',', default_value = "gaussian,student,mixture")]
    pub models: Vec<ModelName>,

    #[arg(long, default_value_t = 5)]
    pub mixture_components: usize,

    #[arg(long, default_value_t = 10)]
    pub mixture_starts: usize,

    /// Rows per simulated data set (default: the number of observations).
    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long, default_value_t = 500)]
    pub replicates: usize,

    #[arg(long, default_value_t = 0.95)]
    pub level: f64,

    /// Rank-transform copula replicates as well as mixture replicates.
    #[arg(long)]
    pub rerank_copula: bool,

    #[arg(long, default_value = ".850:.995:.005")]
    pub grid: String,

    #[arg(long, default_value = "leading")]
    pub subsets: String,

    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Gumbel ξ = log 3 / log 2 and Student ν = 2.76733 with the matching ρ, both θ = 2.
    AppendixB,
}

#[derive(Debug, Args)]
pub struct ExtremalArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    #[arg(long)]
    pub gumbel_xi: Option<f64>,

    /// Dimension of the Gumbel copula.
    #[arg(long, default_value_t = 3)]
    pub j: usize,

    #[arg(long)]
    pub student_nu: Option<f64>,

    /// Student correlations `r12,r13,r23`.
    #[arg(long, value_delimiter = ',')]
    pub student_rho: Option<Vec<f64>>,

    /// Rows simulated per family for the index curves.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,

    #[arg(long, default_value = ".8,.9,.95,.99,.995")]
    pub grid: String,

    /// Tsallis orders for the sandwich-bound report (closed-form families).
    #[arg(long, default_value = "1.5,2,4")]
    pub alpha: String,

    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Independence,
    Comonotone,
    Gaussian,
    Student,
    Gumbel,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model JSON as written by `fit` or `pipeline`.
    #[arg(long, conflicts_with = "family")]
    pub model: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub family: Option<Family>,

    #[arg(long)]
    pub dim: Option<usize>,

    #[arg(long)]
    pub xi: Option<f64>,

    #[arg(long)]
    pub nu: Option<f64>,

    /// Upper-triangle correlations row by row, e.g. `r12,r13,r23`.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,

    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub seed: u64,

    #[arg(long, default_value = "sample.csv")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "observations")]
    pub input_kind: InputKind,

    /// Filter each column with GARCH(1,1) before fitting.
    #[arg(long)]
    pub garch: bool,

    #[arg(long)]
    pub zero_mean: bool,

    #[arg(long, value_enum)]
    pub model: ModelName,

    #[arg(long, default_value_t = 5)]
    pub mixture_components: usize,

    #[arg(long, default_value_t = 10)]
    pub mixture_starts: usize,

    /// Seed for the mixture initialisations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
