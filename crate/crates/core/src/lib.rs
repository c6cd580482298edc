//! Zero-shot out-of-distribution detection with negative labels.
//!
//! The pipeline works on embedding and similarity matrices:
//!
//! - [`store`]: the binary matrix container, label files, cosine kernels.
//! - [`mining`]: picks negative labels far from the ID label space.
//! - [`scoring`]: sum-softmax and related scores with grouping.
//! - [`metrics`]: AUROC and FPR at a fixed TPR.
//! - [`theory`]: closed-form FPR of the positive-count score, Poisson-binomial
//!   laws, and Monte Carlo checks.
//! - [`synth`]: synthetic similarity data from the same matching model.

pub mod metrics;
pub mod mining;
pub mod scoring;
pub mod store;
pub mod synth;
pub mod theory;

pub use metrics::{auroc, detect, fpr_at_tpr, Decision, DetectionMetrics, MetricsError};
pub use mining::{mine, MiningConfig, MiningError, NegativeSelection};
pub use scoring::{ScoreBatch, ScoreConfig, ScoreError, ScoreVariant};
pub use store::{LabelSet, Matrix, MatrixKind, StoreError};
pub use synth::{SynthData, SynthError, SynthSpec};
pub use theory::{TheoryError, TheoryParams};
