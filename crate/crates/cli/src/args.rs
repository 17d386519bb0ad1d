use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use glace::{HiddenActivation, Kind, Mode};

#[derive(Debug, Parser)]
#[command(name = "glace", version, about = "Gaussian embeddings for attributed graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split the graph (or load a split), train a model, write checkpoint and log.
    Train(TrainCmd),
    /// Link prediction AUC/AP on the test pairs of a split.
    EvalLp(EvalLpCmd),
    /// Node classification F1 with a logistic-regression probe.
    EvalNc(EvalNcCmd),
    /// Train on visible nodes and score pairs touching hidden nodes.
    EvalInductive(EvalInductiveCmd),
    /// Write per-node means and variances as TSV.
    Export(ExportCmd),
    /// Re-run a command from its run manifest, single-threaded.
    Replay(ReplayCmd),
}

/// Graph inputs shared by every command.
#[derive(Debug, Args, Clone, Default)]
pub struct GraphArgs {
    /// Edge list: `src dst [weight]` per line.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Attribute matrix (`num_nodes D` header, then triplets or `dense` rows).
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// Treat edges as directed arcs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub directed: Option<bool>,
    /// `key = value` settings file; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Model and optimizer settings. Unset flags fall back to the config file,
/// then to built-in defaults.
#[derive(Debug, Args, Clone, Default)]
pub struct TrainArgs {
    /// `first` or `second` order proximity.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// `glace` (Gaussian) or `lace` (point) embeddings.
    #[arg(long)]
    pub kind: Option<Kind>,
    /// Embedding dimension L.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Hidden layer width m.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Negative samples per edge.
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Edges per batch.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Maximum iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Validation checks without improvement before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Iterations between validation checks.
    #[arg(long)]
    pub val_every: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Hidden-layer activation: `none` or `relu`.
    #[arg(long)]
    pub activation: Option<HiddenActivation>,
    /// KL direction: `auto`, `symmetric` or `asymmetric`.
    #[arg(long)]
    pub kl: Option<String>,
    /// Fraction of edges held out for testing.
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Fraction of edges held out for early stopping.
    #[arg(long)]
    pub val_frac: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Load this split if it exists, otherwise write the generated one here.
    #[arg(long)]
    pub split_manifest: Option<PathBuf>,
    /// Continue from a checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Hide this fraction of nodes and train on the rest.
    #[arg(long)]
    pub hide_frac: Option<f64>,
    /// Also export embeddings including variances.
    #[arg(long)]
    pub export_sigma: bool,
    /// Output directory (default `glace-out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalLpCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, required_unless_present = "concat", conflicts_with = "concat")]
    pub checkpoint: Option<PathBuf>,
    /// Sum the scores of two independently trained models.
    #[arg(long, num_args = 2, value_names = ["CKPT_A", "CKPT_B"])]
    pub concat: Option<Vec<PathBuf>>,
    /// Skip per-model min-max normalization in concatenated scoring.
    #[arg(long)]
    pub no_normalize: bool,
    /// Score the validation pairs instead of the test pairs.
    #[arg(long)]
    pub validation: bool,
    #[arg(long)]
    pub split_manifest: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory for the report and manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalNcCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Omit to classify raw attribute vectors.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `node_id label` per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// A single fraction or a `start:stop:step` sweep.
    #[arg(long, default_value = "0.1:0.9:0.1")]
    pub train_frac: String,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Append log-variances to the mean features.
    #[arg(long)]
    pub with_sigma: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory for the report and manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalInductiveCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Fraction of nodes hidden from training.
    #[arg(long)]
    pub hide_frac: Option<f64>,
    /// Evaluate this model (trained on the manifest's visible graph) instead of training.
    #[arg(long, requires = "split_manifest")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub split_manifest: Option<PathBuf>,
    /// Output directory for the model, split and report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportCmd {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Require variance columns (GLACE only).
    #[arg(long, conflicts_with = "no_sigma")]
    pub export_sigma: bool,
    /// Write means only.
    #[arg(long)]
    pub no_sigma: bool,
    /// Embedding TSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayCmd {
    /// Run manifest written by an earlier command.
    pub manifest: PathBuf,
    /// Output directory; defaults to the original one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
