use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "scgnet",
    version,
    about = "Train sigmoid networks with simulated annealing and scaled conjugate gradients"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write a model file.
    Train(TrainArgs),
    /// Print network outputs and predicted classes for unlabeled data.
    Classify(ClassifyArgs),
    /// Report per-class accuracy of a model on labeled data.
    Evaluate(EvaluateArgs),
    /// Verify analytic derivatives against finite differences.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// The 21 labeled Cushing's syndrome patterns (log scale).
    Cushing,
    /// The 6 unlabeled Cushing's syndrome patterns u1..u6 (log scale).
    CushingUnknown,
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Use an embedded dataset.
    #[arg(long, value_enum, conflicts_with_all = ["data", "manifest"])]
    pub builtin: Option<Builtin>,
    /// Delimited text file, one pattern per line.
    #[arg(long, conflicts_with = "manifest")]
    pub data: Option<PathBuf>,
    /// Label column position: label-first, label-last or none.
    #[arg(long)]
    pub schema: Option<String>,
    /// Field delimiter for --data.
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    /// Manifest describing a data file and its named splits.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Split of the manifest to use.
    #[arg(long, requires = "manifest")]
    pub split: Option<String>,
}

/// `NxW`: N hidden layers, the second and later ones W neurons wide
/// (bias included). A bare `1` means one hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HiddenSpec {
    pub layers: usize,
    pub width: usize,
}

impl FromStr for HiddenSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected NxW or N, got {s:?}");
        let (layers, width) = match s.split_once(['x', 'X']) {
            Some((l, w)) => (l.trim().parse().map_err(|_| bad())?, w.trim().parse().map_err(|_| bad())?),
            None => (s.trim().parse().map_err(|_| bad())?, 0),
        };
        if layers == 0 {
            return Err("at least one hidden layer is required".into());
        }
        if layers >= 2 && width < 2 {
            return Err(format!("{s:?}: layers past the first need a width of at least 2"));
        }
        Ok(Self { layers, width })
    }
}

/// `d:n`, input and output counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub d: usize,
    pub n: usize,
}

impl FromStr for LayerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected d:n, got {s:?}");
        let (d, n) = s.split_once(':').ok_or_else(bad)?;
        Ok(Self {
            d: d.trim().parse().map_err(|_| bad())?,
            n: n.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// `a..b`, inclusive of `a`, exclusive of `b`; `a..=b` includes `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl SeedRange {
    pub fn seeds(self) -> impl Iterator<Item = u64> {
        self.start..self.end
    }
}

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected a..b or a..=b, got {s:?}");
        let (a, b) = s.split_once("..").ok_or_else(bad)?;
        let start: u64 = a.trim().parse().map_err(|_| bad())?;
        let end: u64 = match b.strip_prefix('=') {
            Some(b) => b.trim().parse::<u64>().map_err(|_| bad())? + 1,
            None => b.trim().parse().map_err(|_| bad())?,
        };
        if end <= start {
            return Err(format!("{s:?} is empty"));
        }
        Ok(Self { start, end })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: Source,
    /// Hidden layers as NxW, e.g. 2x4.
    #[arg(long)]
    pub hidden: HiddenSpec,
    /// Input and output counts as d:n; defaults to what the data shows.
    #[arg(long)]
    pub layers: Option<LayerSpec>,
    /// Standardize features with statistics of the training data.
    #[arg(long)]
    pub standardize: bool,
    /// Replace these 1-based feature columns by their natural logarithm.
    #[arg(long, value_delimiter = ',')]
    pub log_columns: Vec<usize>,
    #[arg(long, env = "SCGNET_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Train every seed of a range concurrently and keep the best model.
    #[arg(long, conflicts_with = "interactive")]
    pub seeds: Option<SeedRange>,
    /// Total cold starts allowed under the automatic policy.
    #[arg(long, conflicts_with = "interactive")]
    pub max_cold_starts: Option<usize>,
    /// Ask at each decision point (needs a terminal).
    #[arg(long)]
    pub interactive: bool,
    /// Reasonable-solution threshold on the squared error.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Where to write the model.
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Omit wall-clock fields from the log.
    #[arg(long)]
    pub deterministic: bool,
    /// Emit the training report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Model file written by `train`
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model file written by `train`
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Flip the sign of one analytic gradient component (the check must fail).
    #[arg(long)]
    pub inject_fault: bool,
    #[arg(long)]
    pub json: bool,
}
