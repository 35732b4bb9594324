//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "sepcoef", version, about = "Estimate and test the separation coefficient Λ(Y|X)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate Λ(Y|X) from a CSV file.
    Estimate(EstimateArgs),
    /// Permutation test of Λ(Y|X) = 0.
    Permtest(PermtestArgs),
    /// Select predictors by maximising Λ_n.
    Select(SelectArgs),
    /// Run a simulation scenario and report one row per repetition.
    Simulate(SimulateArgs),
    /// Exact population values of a closed-form model.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessArg {
    None,
    Rank,
    Standardize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    /// Between-group when more than 20% of predictor pairs are tied.
    Auto,
    Standard,
    BetweenGroup,
    /// Midrank plug-in estimator for discrete predictors.
    RankBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Forward,
    BestSubset,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// Random seed; falls back to SEPCOEF_SEED, then 0.
    #[arg(long, env = "SEPCOEF_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, global = true)]
    pub format: Option<OutputFormat>,
    /// Output file, replaced atomically; stdout when absent.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Name of the response column.
    #[arg(short, long, default_value = "y")]
    pub response: String,
    /// Comma-separated predictor columns; all other columns when absent.
    #[arg(short, long, value_delimiter = ',')]
    pub predictors: Vec<String>,
    #[arg(long, value_enum, default_value_t = PreprocessArg::None)]
    pub preprocess: PreprocessArg,
    /// With `--preprocess rank`, also replace the response by its midranks.
    #[arg(long)]
    pub rank_response: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
    pub variant: VariantArg,
    /// Report negative estimates as 0.
    #[arg(long)]
    pub clip_negative: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PermtestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 999)]
    pub n_perms: usize,
    /// Also report (exceedances + 1) / (N + 1).
    #[arg(long)]
    pub corrected: bool,
    /// Include every permutation replicate in the report.
    #[arg(long)]
    pub replicates: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Forward)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
    pub variant: VariantArg,
    /// Largest predictor count for best-subset search.
    #[arg(long, default_value_t = sepcoef::selection::DEFAULT_MAX_P)]
    pub max_p: usize,
    /// Use the predictors on their original scale.
    #[arg(long)]
    pub no_standardize: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    #[value(alias = "intro_discretization")]
    Intro,
    #[value(alias = "s1_bvn")]
    S1,
    #[value(alias = "s2a_bf")]
    S2a,
    #[value(alias = "s2b_bf")]
    S2b,
    #[value(alias = "s3_discretize")]
    S3,
    #[value(alias = "s4a_noise")]
    S4a,
    #[value(alias = "s4b_cosine")]
    S4b,
    #[value(alias = "s5a_indep")]
    S5a,
    #[value(alias = "s5b_scale")]
    S5b,
    #[value(alias = "s5c_rademacher")]
    S5c,
    #[value(alias = "s5d_misspec")]
    S5d,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Correlation of s1.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Number of bins of s3; s3 is ungrouped without it.
    #[arg(long)]
    pub k: Option<usize>,
    /// Noise scale of s4a.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Number of categories of intro; continuous without it.
    #[arg(long)]
    pub categories: Option<usize>,
    #[arg(short, long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Also write the dataset of repetition 0 to this CSV file.
    #[arg(long)]
    pub dump_data: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(subcommand)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Subcommand)]
pub enum FamilyArgs {
    /// Bivariate standard normal with correlation rho.
    Mvn {
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
    },
    /// Two normal groups; s1 and s2 are variances.
    BfNormal {
        #[arg(long, allow_hyphen_values = true)]
        mu1: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu2: f64,
        #[arg(long)]
        s1: f64,
        #[arg(long)]
        s2: f64,
        /// Mass of the first group.
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
    /// U[0, 1] against U[delta, 1 + delta].
    UniformShift {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
    /// Bernoulli(p1) against Bernoulli(p2).
    Bernoulli {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
    /// Exp(rate1) against Exp(rate2).
    Exponential {
        #[arg(long)]
        rate1: f64,
        #[arg(long)]
        rate2: f64,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
    /// Marshall-Olkin copula with parameters (1, beta).
    MarshallOlkin {
        #[arg(long)]
        beta: f64,
    },
    /// Fréchet copula alpha·M + beta·W + (1 - alpha - beta)·Π.
    Frechet {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
    },
    /// EFGM copula with p predictors.
    Efgm {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        p: usize,
    },
    /// Discrete table of the Fréchet-bound class.
    FrechetTable {
        #[arg(long)]
        a10: f64,
        #[arg(long)]
        a20: f64,
    },
    /// Three groups with masses (q, 1 - 2q, q).
    ThreeGroup {
        #[arg(long)]
        q: f64,
    },
    /// Any model given as JSON, e.g. a finite pmf table.
    Model {
        #[arg(long)]
        file: PathBuf,
    },
}
