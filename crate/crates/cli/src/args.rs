use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use wavenet_core::diagnostics::GradOp;
use wavenet_core::training::Optimizer;
use wavenet_core::{CombineMode, Restore};

/// Wave-network text classifier: training, evaluation and diagnostics.
#[derive(Parser, Debug)]
#[command(name = "wavenet", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the single-layer wave classifier and log per-batch loss,
    /// test accuracy, gradient norms and the batch eigen-ratio.
    Train(TrainArgs),
    /// Accuracy of a saved checkpoint on a dataset.
    Eval(EvalArgs),
    /// Gradient-norm kernel density estimates and eigen-ratio summary of a
    /// training metrics file.
    Diagnose(DiagnoseArgs),
    /// Finite-difference check of every hand-derived backward pass.
    Gradcheck(GradcheckArgs),
    /// Embedding-magnitude decay under repeated shrinking updates.
    SimulateDecay(DecayArgs),
    /// Wave-layer parameter estimate: the closed-form count, the published
    /// figure and the itemised implementation count.
    CountParams(CountParamsArgs),
    /// Time and memory operation counts of the wave layer against
    /// self-attention.
    Complexity(ComplexityArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutDir {
    /// Directory for written artifacts.
    #[arg(long, env = "WAVENET_OUT_DIR", default_value = "wavenet-out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// `synthetic` or the path of an AG News style CSV (class,title,description).
    #[arg(long, default_value = "synthetic")]
    pub dataset: String,
    /// Separate test CSV; without it a fraction of the dataset is held out.
    #[arg(long)]
    pub test_dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = CombineMode::Modulation)]
    pub mode: CombineMode,
    #[arg(long, default_value_t = Restore::GlobalSemantics)]
    pub restore: Restore,
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Defaults to 4, or to as many epochs as `--batches` needs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Stop after this many optimizer steps.
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub max_len: usize,
    #[arg(long, default_value = "sgd")]
    pub optimizer: Optimizer,
    /// Vocabulary size cap for CSV datasets.
    #[arg(long, default_value_t = 30_000)]
    pub vocab_cap: usize,
    /// Number of generated texts when the dataset is `synthetic`.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// `synthetic` (the held-out split recorded in the checkpoint) or a CSV path.
    #[arg(long, default_value = "synthetic")]
    pub dataset: String,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Metrics CSV written by `train`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Points in each density grid.
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Check only this operation (default: all).
    #[arg(long)]
    pub op: Option<GradOp>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug)]
pub struct DecayArgs {
    #[arg(long, default_value_t = 1.0)]
    pub w0: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eta: f64,
    /// Error held constant within an epoch. Repeat to give one per epoch;
    /// a single value is reused for every epoch.
    #[arg(long = "error", default_values_t = [0.4311])]
    pub errors: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1500)]
    pub iters_per_epoch: usize,
    /// Also report the first iteration at which the first epoch's rate
    /// brings the magnitude to this value.
    #[arg(long)]
    pub target: Option<f64>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug)]
pub struct CountParamsArgs {
    #[arg(long, default_value_t = 768)]
    pub d: u64,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    /// Sequence length.
    #[arg(long, default_value_t = 64)]
    pub n: u64,
    #[arg(long, default_value_t = 768)]
    pub d: u64,
    #[command(flatten)]
    pub out: OutDir,
}
