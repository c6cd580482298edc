//! Zero-shot classification and OOD scores over an extended label space.
//!
//! Every score takes one sample's cosines to the ID labels (`sim_id`) and
//! to the negative labels (`sim_neg`). Higher scores mean "more ID-like".
//! Arithmetic is done in f64 regardless of the input precision.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use thiserror::Error;

use crate::store::{cosine_row_into, Matrix, MatrixKind, StoreError};

pub const DEFAULT_TAU: f64 = 0.01;
pub const DEFAULT_N_GROUPS: usize = 100;
pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 0.25;

const MIN_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("ID similarity row is empty")]
    EmptyRow,
    #[error("temperature must be positive and finite, got {0}")]
    NonPositiveTau(f64),
    #[error("n_groups must be at least 1")]
    ZeroGroups,
    #[error("binarization threshold {0} is outside [-1, 1]")]
    BadBeta(f64),
    #[error("{m} negative labels cannot fill {n_groups} groups")]
    GroupTooSmall { m: usize, n_groups: usize },
    #[error("ratio denominator {0:e} is too close to zero")]
    DenominatorZero(f64),
    #[error("cannot split {cols} columns into {k} ID columns plus negatives")]
    ColumnSplitInvalid { k: usize, cols: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, ScoreError>;

/// The score family. Names follow the `kebab-case` spelling used on the
/// command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreVariant {
    /// `sum exp(id/tau) / (sum exp(id/tau) + sum exp(neg/tau))`
    SumSoftmax,
    /// `max exp(id/tau) / (sum exp(id/tau) + sum exp(neg/tau))`
    MaxSoftmax,
    /// `sum id / (sum id + sum neg)`
    SumRatio,
    /// `max id / (sum id + sum neg)`
    MaxRatio,
    /// `sum id - alpha * sum neg`
    Linear,
    /// `#[id >= beta] - alpha * #[neg >= beta]`
    BinarizedLinear,
    /// `-#[neg >= beta]`
    BinarizedCount,
    /// `#[id >= beta] / (#[id >= beta] + #[neg >= beta])`
    BinarizedRatio,
    /// `max id`; ignores the negatives.
    MaxCosOnly,
}

impl ScoreVariant {
    pub const ALL: [ScoreVariant; 9] = [
        ScoreVariant::Linear,
        ScoreVariant::MaxCosOnly,
        ScoreVariant::BinarizedLinear,
        ScoreVariant::BinarizedCount,
        ScoreVariant::SumSoftmax,
        ScoreVariant::MaxSoftmax,
        ScoreVariant::SumRatio,
        ScoreVariant::MaxRatio,
        ScoreVariant::BinarizedRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScoreVariant::SumSoftmax => "sum-softmax",
            ScoreVariant::MaxSoftmax => "max-softmax",
            ScoreVariant::SumRatio => "sum-ratio",
            ScoreVariant::MaxRatio => "max-ratio",
            ScoreVariant::Linear => "linear",
            ScoreVariant::BinarizedLinear => "binarized-linear",
            ScoreVariant::BinarizedCount => "binarized-count",
            ScoreVariant::BinarizedRatio => "binarized-ratio",
            ScoreVariant::MaxCosOnly => "max-cos",
        }
    }

    /// Variants whose value always lies in `[0, 1]`.
    pub fn is_bounded(self) -> bool {
        matches!(
            self,
            ScoreVariant::SumSoftmax | ScoreVariant::MaxSoftmax | ScoreVariant::BinarizedRatio
        )
    }
}

impl fmt::Display for ScoreVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ScoreVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ScoreVariant::ALL.iter().map(|v| v.name()).collect();
                format!(
                    "unknown score variant {s:?}; expected one of {}",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub variant: ScoreVariant,
    pub tau: f64,
    pub n_groups: usize,
    pub alpha: f64,
    pub beta: f64,
    /// When set, negatives are permuted with this seed before being split
    /// into groups. Off by default: groups are contiguous in rank order.
    pub shuffle_seed: Option<u64>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            variant: ScoreVariant::SumSoftmax,
            tau: DEFAULT_TAU,
            n_groups: DEFAULT_N_GROUPS,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            shuffle_seed: None,
        }
    }
}

impl ScoreConfig {
    pub fn with_variant(variant: ScoreVariant) -> Self {
        ScoreConfig {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ScoreError::NonPositiveTau(self.tau));
        }
        if self.n_groups == 0 {
            return Err(ScoreError::ZeroGroups);
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            return Err(ScoreError::BadBeta(self.beta));
        }
        Ok(())
    }

    /// Number of negatives that survive grouping: `n_groups * floor(m / n_groups)`.
    pub fn effective_negatives(&self, m: usize) -> usize {
        if self.n_groups == 0 {
            return 0;
        }
        self.n_groups * (m / self.n_groups)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBatch {
    pub scores: Vec<f64>,
    pub config: ScoreConfig,
    pub k: usize,
    pub m_effective: usize,
}

#[inline]
fn f<T: Copy + Into<f64>>(v: T) -> f64 {
    v.into()
}

fn max_of<T: Copy + Into<f64>>(row: &[T]) -> f64 {
    row.iter().map(|&v| f(v)).fold(f64::NEG_INFINITY, f64::max)
}

fn sum_of<T: Copy + Into<f64>>(row: &[T]) -> f64 {
    row.iter().map(|&v| f(v)).sum()
}

fn count_at_least<T: Copy + Into<f64>>(row: &[T], beta: f64) -> usize {
    row.iter().filter(|&&v| f(v) >= beta).count()
}

/// Index of the largest cosine; ties go to the smallest index.
pub fn classify<T: Copy + Into<f64>>(sim_id: &[T]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in sim_id.iter().enumerate() {
        let v = f(v);
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i).ok_or(ScoreError::EmptyRow)
}

/// Temperature-scaled exponential sums `(sum_id, max_id, sum_neg)`, all
/// relative to the largest cosine across both rows.
fn softmax_parts<T: Copy + Into<f64>>(sim_id: &[T], sim_neg: &[T], tau: f64) -> (f64, f64, f64) {
    let shift = max_of(sim_id).max(max_of(sim_neg));
    let e = |v: T| ((f(v) - shift) / tau).exp();
    let mut id_sum = 0.0;
    let mut id_max = 0.0f64;
    for &v in sim_id {
        let x = e(v);
        id_sum += x;
        id_max = id_max.max(x);
    }
    let neg_sum: f64 = sim_neg.iter().map(|&v| e(v)).sum();
    (id_sum, id_max, neg_sum)
}

/// Sum-softmax share of the ID labels in the extended label space.
///
/// With no negatives the score is exactly 1.
pub fn neglabel_score<T: Copy + Into<f64>>(sim_id: &[T], sim_neg: &[T], tau: f64) -> Result<f64> {
    if sim_id.is_empty() {
        return Err(ScoreError::EmptyRow);
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(ScoreError::NonPositiveTau(tau));
    }
    let (id_sum, _, neg_sum) = softmax_parts(sim_id, sim_neg, tau);
    Ok(id_sum / (id_sum + neg_sum))
}

/// Ungrouped score of the configured variant.
pub fn variant_score<T: Copy + Into<f64>>(
    sim_id: &[T],
    sim_neg: &[T],
    cfg: &ScoreConfig,
) -> Result<f64> {
    if sim_id.is_empty() {
        return Err(ScoreError::EmptyRow);
    }
    cfg.validate()?;
    let score = match cfg.variant {
        ScoreVariant::SumSoftmax => neglabel_score(sim_id, sim_neg, cfg.tau)?,
        ScoreVariant::MaxSoftmax => {
            let (id_sum, id_max, neg_sum) = softmax_parts(sim_id, sim_neg, cfg.tau);
            id_max / (id_sum + neg_sum)
        }
        ScoreVariant::SumRatio | ScoreVariant::MaxRatio => {
            let id_sum = sum_of(sim_id);
            let den = id_sum + sum_of(sim_neg);
            if den.abs() < MIN_DENOMINATOR {
                return Err(ScoreError::DenominatorZero(den));
            }
            let num = if cfg.variant == ScoreVariant::SumRatio {
                id_sum
            } else {
                max_of(sim_id)
            };
            num / den
        }
        ScoreVariant::Linear => sum_of(sim_id) - cfg.alpha * sum_of(sim_neg),
        ScoreVariant::BinarizedLinear => {
            count_at_least(sim_id, cfg.beta) as f64
                - cfg.alpha * count_at_least(sim_neg, cfg.beta) as f64
        }
        ScoreVariant::BinarizedCount => -(count_at_least(sim_neg, cfg.beta) as f64),
        ScoreVariant::BinarizedRatio => {
            let id = count_at_least(sim_id, cfg.beta);
            let den = id + count_at_least(sim_neg, cfg.beta);
            // No label fires at all: no evidence of ID membership.
            if den == 0 {
                0.0
            } else {
                id as f64 / den as f64
            }
        }
        ScoreVariant::MaxCosOnly => max_of(sim_id),
    };
    Ok(score)
}

/// Permutation applied to the negatives before grouping when shuffling is on.
pub fn group_permutation(m: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    perm
}

fn grouped_in_order<T: Copy + Into<f64>>(
    sim_id: &[T],
    sim_neg: &[T],
    cfg: &ScoreConfig,
) -> Result<f64> {
    let m = sim_neg.len();
    if m < cfg.n_groups {
        return Err(ScoreError::GroupTooSmall {
            m,
            n_groups: cfg.n_groups,
        });
    }
    let size = m / cfg.n_groups;
    // Running mean: equal group scores give back that score bit for bit.
    let mut mean = 0.0;
    for (g, group) in sim_neg[..size * cfg.n_groups]
        .chunks_exact(size)
        .enumerate()
    {
        let s = variant_score(sim_id, group, cfg)?;
        mean += (s - mean) / (g + 1) as f64;
    }
    Ok(mean)
}

/// Mean of the per-group variant scores.
///
/// The first `n_groups * floor(M / n_groups)` negatives are split into
/// `n_groups` contiguous groups; the remainder is discarded.
pub fn grouped_score<T: Copy + Into<f64>>(
    sim_id: &[T],
    sim_neg: &[T],
    cfg: &ScoreConfig,
) -> Result<f64> {
    cfg.validate()?;
    if sim_id.is_empty() {
        return Err(ScoreError::EmptyRow);
    }
    match cfg.shuffle_seed {
        None => grouped_in_order(sim_id, sim_neg, cfg),
        Some(seed) => {
            let perm = group_permutation(sim_neg.len(), seed);
            let shuffled: Vec<f64> = perm.iter().map(|&j| f(sim_neg[j])).collect();
            let id: Vec<f64> = sim_id.iter().map(|&v| f(v)).collect();
            grouped_in_order(&id, &shuffled, cfg)
        }
    }
}

fn check_batch(m: usize, cfg: &ScoreConfig) -> Result<()> {
    cfg.validate()?;
    if m < cfg.n_groups {
        return Err(ScoreError::GroupTooSmall {
            m,
            n_groups: cfg.n_groups,
        });
    }
    Ok(())
}

fn finish(scores: Vec<Result<f64>>, k: usize, m: usize, cfg: &ScoreConfig) -> Result<ScoreBatch> {
    let scores = scores.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ScoreBatch {
        scores,
        config: *cfg,
        k,
        m_effective: cfg.effective_negatives(m),
    })
}

/// Scores every row of an `N x (K + M)` similarity matrix whose first `k`
/// columns are the ID labels and the rest the negatives in rank order.
pub fn score_batch(sims: &Matrix, k: usize, cfg: &ScoreConfig) -> Result<ScoreBatch> {
    sims.expect_kind(MatrixKind::Similarities)?;
    let cols = sims.dims();
    if k == 0 || k >= cols {
        return Err(ScoreError::ColumnSplitInvalid { k, cols });
    }
    let m = cols - k;
    check_batch(m, cfg)?;
    let scores: Vec<Result<f64>> = sims
        .data()
        .par_chunks_exact(cols)
        .map(|row| grouped_score(&row[..k], &row[k..], cfg))
        .collect();
    finish(scores, k, m, cfg)
}

/// Scores image embeddings against ID and negative label embeddings without
/// materializing the full similarity matrix.
pub fn score_embeddings(
    images: &Matrix,
    id_emb: &Matrix,
    neg_emb: &Matrix,
    cfg: &ScoreConfig,
) -> Result<ScoreBatch> {
    for m in [images, id_emb, neg_emb] {
        m.expect_kind(MatrixKind::Embeddings)?;
    }
    for other in [id_emb, neg_emb] {
        if other.dims() != images.dims() {
            return Err(ScoreError::DimMismatch {
                left: images.dims(),
                right: other.dims(),
            });
        }
    }
    let (k, m) = (id_emb.rows(), neg_emb.rows());
    check_batch(m, cfg)?;
    let scores: Vec<Result<f64>> = images
        .data()
        .par_chunks_exact(images.dims())
        .map_init(
            || (vec![0.0f32; k], vec![0.0f32; m]),
            |(id_row, neg_row), img| {
                cosine_row_into(img, id_emb, id_row);
                cosine_row_into(img, neg_emb, neg_row);
                grouped_score(id_row, neg_row, cfg)
            },
        )
        .collect();
    finish(scores, k, m, cfg)
}

/// `N x (K + M)` similarity matrix of images against the extended label
/// space, ID columns first.
pub fn extended_similarities(images: &Matrix, id_emb: &Matrix, neg_emb: &Matrix) -> Result<Matrix> {
    for m in [images, id_emb, neg_emb] {
        m.expect_kind(MatrixKind::Embeddings)?;
    }
    for other in [id_emb, neg_emb] {
        if other.dims() != images.dims() {
            return Err(ScoreError::DimMismatch {
                left: images.dims(),
                right: other.dims(),
            });
        }
    }
    let (k, m) = (id_emb.rows(), neg_emb.rows());
    let cols = k + m;
    let mut data = vec![0.0f32; images.rows() * cols];
    data.par_chunks_mut(cols)
        .zip(images.data().par_chunks_exact(images.dims()))
        .for_each(|(out, img)| {
            let (id_out, neg_out) = out.split_at_mut(k);
            cosine_row_into(img, id_emb, id_out);
            cosine_row_into(img, neg_emb, neg_out);
        });
    Ok(Matrix::similarities(images.rows(), cols, data)?)
}
