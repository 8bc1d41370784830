//! Command-line surface. Every screener flag can also come from the
//! environment (`STREAMSCREEN_*`); explicit flags win over the environment,
//! which wins over the built-in defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use streamscreen_core::bincount::Method;
use streamscreen_core::engine::{ScreenerConfig, DEFAULT_MINIBATCH};

use crate::io::Format;

#[derive(Parser)]
#[command(
    name = "streamscreen",
    version,
    about = "Online feature screening over labeled data streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Score and rank the features of a labeled dataset in one pass.
    Screen(ScreenArgs),
    /// Compare the streaming pipeline against the exact offline reference
    /// over epsilon and minibatch grids.
    Compare(CompareArgs),
    /// Run the synthetic drift benchmark and report detection rates.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    #[value(alias = "t_score", alias = "t")]
    TScore,
    Fisher,
    Gini,
    #[value(alias = "chi_square", alias = "chi2")]
    ChiSquare,
    #[value(alias = "mutual_info", alias = "mi")]
    MutualInfo,
}

impl From<MethodArg> for Method {
    fn from(arg: MethodArg) -> Method {
        match arg {
            MethodArg::TScore => Method::TScore,
            MethodArg::Fisher => Method::Fisher,
            MethodArg::Gini => Method::Gini,
            MethodArg::ChiSquare => Method::ChiSquare,
            MethodArg::MutualInfo => Method::MutualInfo,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScreenerFlags {
    /// Screening criterion.
    #[arg(
        long,
        value_enum,
        env = "STREAMSCREEN_METHOD",
        default_value = "mutual-info"
    )]
    pub method: MethodArg,

    /// Summary precision for the bin-count criteria (default 0.001).
    #[arg(long, env = "STREAMSCREEN_EPSILON")]
    pub epsilon: Option<f64>,

    /// Quantile bin count for the bin-count criteria (default 5).
    #[arg(long, env = "STREAMSCREEN_BINS")]
    pub bins: Option<usize>,

    /// Batch size for amortized ingestion.
    #[arg(long, env = "STREAMSCREEN_MINIBATCH", default_value_t = DEFAULT_MINIBATCH)]
    pub minibatch: usize,

    /// Fading factor in (0, 1); enables concept-drift adaptation.
    #[arg(long, env = "STREAMSCREEN_ALPHA")]
    pub alpha: Option<f64>,

    /// Treat input entries as sparse (implicit zeros elsewhere).
    #[arg(long, env = "STREAMSCREEN_SPARSE", default_value_t = false)]
    pub sparse: bool,
}

impl ScreenerFlags {
    pub fn to_config(&self) -> ScreenerConfig {
        let mut config = ScreenerConfig::new(self.method.into())
            .minibatch(self.minibatch)
            .sparse(self.sparse);
        if let Some(eps) = self.epsilon {
            config = config.epsilon(eps);
        }
        if let Some(bins) = self.bins {
            config = config.k_bins(bins);
        }
        if let Some(alpha) = self.alpha {
            config = config.alpha(alpha);
        }
        config
    }
}

#[derive(Args)]
pub struct ScreenArgs {
    /// Input dataset path.
    pub input: PathBuf,

    #[command(flatten)]
    pub screener: ScreenerFlags,

    /// Input line format.
    #[arg(
        long,
        value_enum,
        env = "STREAMSCREEN_FORMAT",
        default_value = "svmlight"
    )]
    pub format: Format,

    /// Also emit the top-k selected feature indices.
    #[arg(long, env = "STREAMSCREEN_TOP_K")]
    pub top_k: Option<usize>,

    /// Output directory.
    #[arg(long, env = "STREAMSCREEN_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Input dataset path (held in memory for the offline reference).
    pub input: PathBuf,

    /// Input line format.
    #[arg(
        long,
        value_enum,
        env = "STREAMSCREEN_FORMAT",
        default_value = "svmlight"
    )]
    pub format: Format,

    /// Quantile bin count.
    #[arg(long, env = "STREAMSCREEN_BINS", default_value_t = 5)]
    pub bins: usize,

    /// Epsilon grid for the accuracy tables, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.2,0.02,0.01,0.002,0.001,0.0006666666666666666,0.0005"
    )]
    pub epsilon_grid: Vec<f64>,

    /// Minibatch grid for the runtime table, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,2,4,8,16,32,64,128,256,512,1024,2048"
    )]
    pub minibatch_grid: Vec<usize>,

    /// Fixed epsilon for the runtime-vs-minibatch table.
    #[arg(long, env = "STREAMSCREEN_EPSILON", default_value_t = 0.001)]
    pub epsilon: f64,

    /// Fixed minibatch for the runtime-vs-epsilon table.
    #[arg(long, env = "STREAMSCREEN_MINIBATCH", default_value_t = DEFAULT_MINIBATCH)]
    pub minibatch: usize,

    /// Treat input entries as sparse.
    #[arg(long, env = "STREAMSCREEN_SPARSE", default_value_t = false)]
    pub sparse: bool,

    /// Output directory.
    #[arg(long, env = "STREAMSCREEN_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Feature count p.
    #[arg(long, default_value_t = 200)]
    pub features: usize,

    /// Simultaneously active true features.
    #[arg(long, default_value_t = 20)]
    pub true_k: usize,

    /// Non-zero coefficient value.
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,

    /// Cross-feature correlation parameter.
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,

    /// Stream length.
    #[arg(long, default_value_t = 20_000)]
    pub samples: u64,

    /// Shift intervals to test, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2000")]
    pub shift: Vec<u64>,

    /// Fading factors to test (the static baseline always runs too).
    #[arg(long, value_delimiter = ',', env = "STREAMSCREEN_ALPHA")]
    pub alpha: Vec<f64>,

    /// Methods to run (defaults to all five).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Vec<MethodArg>,

    /// Samples between score checkpoints.
    #[arg(long, default_value_t = 1000)]
    pub checkpoint_every: u64,

    /// Selection sizes at which detection is evaluated.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub at_k: Vec<usize>,

    /// Summary precision for the bin-count criteria.
    #[arg(long, env = "STREAMSCREEN_EPSILON", default_value_t = 0.001)]
    pub epsilon: f64,

    /// Quantile bin count.
    #[arg(long, env = "STREAMSCREEN_BINS", default_value_t = 5)]
    pub bins: usize,

    /// Minibatch size for ingestion.
    #[arg(long, env = "STREAMSCREEN_MINIBATCH", default_value_t = DEFAULT_MINIBATCH)]
    pub minibatch: usize,

    /// Stream seed.
    #[arg(long, env = "STREAMSCREEN_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, env = "STREAMSCREEN_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
}
