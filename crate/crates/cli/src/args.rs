use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latentpath::model::InnerScheme;

#[derive(Parser, Debug)]
#[command(name = "latentpath", version, about = "PLS path modeling for composite indices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate the model and write the measurement and structural tables.
    Fit(FitArgs),
    /// Fit, then screen the reliability/validity thresholds and outer residuals.
    Assess(FitArgs),
    /// Percentile bootstrap of paths, total effects and loadings.
    Bootstrap(BootArgs),
    /// 0-100 index scores of one block, optionally compared across models.
    Index(IndexArgs),
    /// OLS regressions with robust standard errors.
    Regress(RegressArgs),
    /// Draw a synthetic dataset from a generator spec.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV panel: one row per country (and year).
    #[arg(long)]
    pub data: PathBuf,
    /// Keep only rows of this year.
    #[arg(long)]
    pub year: Option<i64>,
    /// Entity key columns, `country` or `country,year`. By default `year` is
    /// used when present.
    #[arg(long, value_delimiter = ',')]
    pub entity_cols: Option<Vec<String>>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// JSON model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory; tables go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct BootArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 500)]
    pub boot: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub ci: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Block to score; defaults to the last block of the model.
    #[arg(long)]
    pub block: Option<String>,
    #[arg(long, default_value = "index")]
    pub label: String,
    /// Further model files scored on the same block and rank-compared.
    #[arg(long)]
    pub compare: Vec<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// JSON regression spec, or `{"models": [...], "spearman": [...]}`.
    #[arg(long)]
    pub spec: PathBuf,
    /// Add this model's index of `--block` as a column named `--label`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub block: Option<String>,
    #[arg(long, default_value = "index")]
    pub label: String,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON generator spec.
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Centroid,
    Factorial,
    Path,
}

impl From<Scheme> for InnerScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Centroid => InnerScheme::Centroid,
            Scheme::Factorial => InnerScheme::Factorial,
            Scheme::Path => InnerScheme::Path,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}
