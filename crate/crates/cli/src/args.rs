//! Command-line surface.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use neglabel::ScoreVariant;

/// Crate version plus the container format revision this build reads and writes.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (container format v1)");

const VARIANTS: &str = "sum-softmax, max-softmax, sum-ratio, max-ratio, linear, \
binarized-linear, binarized-count, binarized-ratio, max-cos";

#[derive(Debug, Parser)]
#[command(
    name = "neglabel",
    version = VERSION,
    about = "Zero-shot OOD detection with mined negative labels",
    args_override_self = true
)]
pub struct Cli {
    /// Worker threads (defaults to the number of logical cores).
    #[arg(long, global = true, value_name = "N", display_order = 900)]
    pub threads: Option<usize>,
    /// TOML file whose `[<subcommand>]` table supplies default flag values.
    #[arg(long, global = true, value_name = "FILE", display_order = 901)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Select negative labels far from the ID label set.
    Mine(MineArgs),
    /// Score images over the extended label space.
    Score(ScoreArgs),
    /// AUROC and FPR at a TPR target from ID/OOD scores.
    Eval(EvalArgs),
    /// Closed-form and simulated FPR of the count-based toy score.
    Theory(TheoryArgs),
    /// Generate a synthetic similarity matrix from the matching model.
    Synth(SynthArgs),
    /// Grid sweep over scoring and mining parameters.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct MineArgs {
    /// ID label embeddings (K x D container).
    #[arg(long, value_name = "FILE")]
    pub id_emb: PathBuf,
    /// Candidate label embeddings (C x D container).
    #[arg(long, value_name = "FILE")]
    pub cand_emb: PathBuf,
    /// Candidate labels, one per line, aligned with --cand-emb rows.
    #[arg(long, value_name = "FILE")]
    pub cand_labels: PathBuf,
    /// Percentile of the candidate-to-ID distance list used for ranking.
    #[arg(long, default_value_t = neglabel::mining::DEFAULT_ETA)]
    pub eta: f64,
    /// Number of negative labels to select.
    #[arg(long, default_value_t = neglabel::mining::DEFAULT_M)]
    pub m: usize,
    /// Candidate rows per similarity block.
    #[arg(long, default_value_t = neglabel::mining::DEFAULT_BLOCK_ROWS)]
    pub block_rows: usize,
    /// Selection JSON output.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write the selected negative embeddings (M x D container).
    #[arg(long, value_name = "FILE")]
    pub neg_emb_out: Option<PathBuf>,
    /// Also write the selected negative labels.
    #[arg(long, value_name = "FILE")]
    pub neg_labels_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreParams {
    #[arg(long, default_value = "sum-softmax", help = format!("Score variant, one of: {VARIANTS}"))]
    pub variant: ScoreVariant,
    /// Softmax temperature.
    #[arg(long, default_value_t = neglabel::scoring::DEFAULT_TAU)]
    pub tau: f64,
    /// Number of negative-label groups; the remainder M mod n_groups is dropped.
    #[arg(long, default_value_t = neglabel::scoring::DEFAULT_N_GROUPS)]
    pub n_groups: usize,
    /// Weight of the negative term in the linear variants.
    #[arg(long, default_value_t = neglabel::scoring::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Binarization threshold of the binarized variants.
    #[arg(long, default_value_t = neglabel::scoring::DEFAULT_BETA)]
    pub beta: f64,
    /// Shuffle negatives with this seed before grouping (off by default).
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct ScoreArgs {
    /// Image embeddings (N x D container).
    #[arg(long, value_name = "FILE")]
    pub image_emb: Option<PathBuf>,
    /// ID label embeddings (K x D container).
    #[arg(long, value_name = "FILE")]
    pub id_emb: Option<PathBuf>,
    /// Negative label embeddings in rank order (M x D container).
    #[arg(long, value_name = "FILE")]
    pub neg_emb: Option<PathBuf>,
    /// Selection JSON from `mine`; needs --cand-emb and --cand-labels.
    #[arg(long, value_name = "FILE")]
    pub selection: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub cand_emb: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub cand_labels: Option<PathBuf>,
    /// Precomputed N x (K + M) similarities, ID columns first.
    #[arg(long, value_name = "FILE")]
    pub sims: Option<PathBuf>,
    /// Number of ID columns in --sims.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub params: ScoreParams,
    /// Scores CSV output.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct EvalArgs {
    /// Scores of ID samples.
    #[arg(long, value_name = "FILE")]
    pub id_scores: Option<PathBuf>,
    /// Scores of OOD samples.
    #[arg(long, value_name = "FILE")]
    pub ood_scores: Option<PathBuf>,
    /// Scores of all samples; split with --mask.
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    /// One line per sample: 1 for ID, 0 for OOD.
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
    /// TPR target of the FPR metric.
    #[arg(long, default_value_t = neglabel::metrics::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Metrics JSON output (stdout when absent).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct TheoryArgs {
    /// Negative label counts, comma separated.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "100,500,1000,5000,10000")]
    pub m: Vec<f64>,
    /// Per-label match probability for ID images.
    #[arg(long, default_value_t = 0.05)]
    pub p1: f64,
    /// Per-label match probability for OOD images.
    #[arg(long, default_value_t = 0.15)]
    pub p2: f64,
    /// TPR target.
    #[arg(long, default_value_t = neglabel::metrics::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Simulated samples per population; 0 skips the simulation columns.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent random streams used by the simulation.
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
    /// CSV output (stdout when absent).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SpecOverrides {
    /// Spec file (TOML, or JSON when the name ends in .json).
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// ID label count.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n_id: Option<usize>,
    #[arg(long)]
    pub n_ood: Option<usize>,
    #[arg(long)]
    pub mu_pos: Option<f64>,
    #[arg(long)]
    pub mu_neg: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Permit p1 >= p2.
    #[arg(long)]
    pub allow_degenerate: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct SynthArgs {
    #[command(flatten)]
    pub spec: SpecOverrides,
    /// Negative label count.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub p2: Option<f64>,
    /// Emit random unit embeddings of this dimension instead of similarities.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub spec: SpecOverrides,
    /// Negative label counts.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "100,500,2000")]
    pub m: Vec<usize>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0.05")]
    pub p1: Vec<f64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0.15")]
    pub p2: Vec<f64>,
    /// Mining percentiles (embedding mode only).
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0.05")]
    pub eta: Vec<f64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "sum-softmax",
          help = format!("Score variants, any of: {VARIANTS}"))]
    pub variant: Vec<ScoreVariant>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0.01")]
    pub tau: Vec<f64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "100")]
    pub n_groups: Vec<usize>,
    #[arg(long, default_value_t = neglabel::scoring::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = neglabel::scoring::DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = neglabel::metrics::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Embedding mode: ID label embeddings.
    #[arg(long, value_name = "FILE", requires_all = ["cand_emb", "cand_labels", "image_emb", "mask"])]
    pub id_emb: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub cand_emb: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub cand_labels: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub image_emb: Option<PathBuf>,
    /// ID/OOD mask aligned with --image-emb rows.
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
    /// CSV output (stdout when absent).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn version_names_container_format() {
        assert!(VERSION.ends_with(&format!("format v{})", neglabel::store::FORMAT_VERSION)));
    }

    #[test]
    fn later_flags_win() {
        let cli = Cli::try_parse_from([
            "neglabel", "theory", "--m=1,2", "--p1=0.2", "--m", "7,8,9", "--p1", "0.3",
        ])
        .unwrap();
        let Command::Theory(t) = cli.command else {
            panic!()
        };
        assert_eq!(t.m, vec![7.0, 8.0, 9.0]);
        assert_eq!(t.p1, 0.3);
    }
}
