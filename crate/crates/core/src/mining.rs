//! Negative-label mining.
//!
//! Every candidate label gets a distance to the ID label space: the
//! `eta`-percentile of its negated cosines to all ID labels. The `m`
//! candidates with the largest distance become the negative labels.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::store::{cosine_row_into, LabelSet, Matrix, MatrixKind, StoreError};

pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_M: usize = 10_000;
pub const DEFAULT_BLOCK_ROWS: usize = 1024;

// Absorbs products such as 0.29 * 100 landing just below an integer.
const RANK_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("similarity row is empty")]
    EmptyRow,
    #[error("eta = {0} is outside [0, 1]")]
    BadEta(f64),
    #[error("m must be at least 1")]
    ZeroM,
    #[error("m = {m} exceeds the {available} distinct candidates")]
    MTooLarge { m: usize, available: usize },
    #[error("{labels} candidate labels for {rows} candidate embeddings")]
    LabelCountMismatch { labels: usize, rows: usize },
    #[error("dimension mismatch: ID embeddings have {id} dims, candidates {cand}")]
    DimMismatch { id: usize, cand: usize },
}

pub type Result<T> = std::result::Result<T, MiningError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningConfig {
    pub eta: f64,
    pub m: usize,
    /// Candidate rows per similarity block; bounds scratch memory at
    /// `block_rows * K` floats.
    pub block_rows: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            eta: DEFAULT_ETA,
            m: DEFAULT_M,
            block_rows: DEFAULT_BLOCK_ROWS,
        }
    }
}

impl MiningConfig {
    pub fn new(eta: f64, m: usize) -> Self {
        MiningConfig {
            eta,
            m,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(MiningError::BadEta(self.eta));
        }
        if self.m == 0 {
            return Err(MiningError::ZeroM);
        }
        Ok(())
    }
}

/// The chosen negative labels in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSelection {
    /// Positions in the deduplicated candidate list.
    pub indices: Vec<usize>,
    pub labels: LabelSet,
    pub distances: Vec<f64>,
}

impl NegativeSelection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Removes exact-string duplicates, keeping first occurrences in order.
///
/// The returned map gives, for each kept label, its position in the input.
pub fn dedup_candidates(candidates: &LabelSet) -> (LabelSet, Vec<usize>) {
    let mut seen: HashMap<&str, ()> = HashMap::with_capacity(candidates.len());
    let mut kept = Vec::new();
    let mut origin = Vec::new();
    for (i, label) in candidates.iter().enumerate() {
        if seen.insert(label, ()).is_none() {
            kept.push(label.to_owned());
            origin.push(i);
        }
    }
    let labels = LabelSet::new(kept).expect("subset of a valid label set");
    (labels, origin)
}

/// Nearest-rank index `floor(eta * (k - 1))` into an ascending array of length `k`.
pub fn percentile_rank(eta: f64, k: usize) -> usize {
    debug_assert!(k >= 1);
    let r = (eta * (k - 1) as f64 + RANK_EPS).floor() as usize;
    r.min(k - 1)
}

/// `eta`-percentile of the negated cosines in `cand_sims`.
///
/// `eta = 0` gives the minimum distance (negated maximum cosine), `eta = 1`
/// the maximum.
pub fn percentile_distance(cand_sims: &[f32], eta: f64) -> Result<f64> {
    if cand_sims.is_empty() {
        return Err(MiningError::EmptyRow);
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(MiningError::BadEta(eta));
    }
    let mut neg: Vec<f32> = cand_sims.iter().map(|&c| -c).collect();
    Ok(percentile_in_place(&mut neg, eta))
}

fn percentile_in_place(values: &mut [f32], eta: f64) -> f64 {
    let rank = percentile_rank(eta, values.len());
    let (_, v, _) = values.select_nth_unstable_by(rank, f32::total_cmp);
    *v as f64
}

/// Ranks candidates by (distance descending, index ascending).
pub fn rank_order(distances: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_unstable_by(|&a, &b| match distances[b].total_cmp(&distances[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    order
}

/// Percentile distance of every candidate row to the ID label space.
///
/// Similarities are produced `block_rows` candidates at a time; blocks are
/// processed in parallel.
pub fn candidate_distances(
    id_emb: &Matrix,
    cand_emb: &Matrix,
    eta: f64,
    block_rows: usize,
) -> Result<Vec<f64>> {
    id_emb.expect_kind(MatrixKind::Embeddings)?;
    cand_emb.expect_kind(MatrixKind::Embeddings)?;
    if id_emb.dims() != cand_emb.dims() {
        return Err(MiningError::DimMismatch {
            id: id_emb.dims(),
            cand: cand_emb.dims(),
        });
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(MiningError::BadEta(eta));
    }
    let k = id_emb.rows();
    let dims = cand_emb.dims();
    let block = block_rows.max(1);
    let mut distances = vec![0.0f64; cand_emb.rows()];
    distances
        .par_chunks_mut(block)
        .zip(cand_emb.data().par_chunks(block * dims))
        .for_each(|(dist_out, cand_block)| {
            let mut sims = vec![0.0f32; k];
            for (d, cand_row) in dist_out.iter_mut().zip(cand_block.chunks_exact(dims)) {
                cosine_row_into(cand_row, id_emb, &mut sims);
                for s in sims.iter_mut() {
                    *s = -*s;
                }
                *d = percentile_in_place(&mut sims, eta);
            }
        });
    Ok(distances)
}

/// Selects `cfg.m` negative labels from the candidate corpus.
pub fn mine(
    id_emb: &Matrix,
    cand_emb: &Matrix,
    cand_labels: &LabelSet,
    cfg: &MiningConfig,
) -> Result<NegativeSelection> {
    cfg.validate()?;
    if cand_labels.len() != cand_emb.rows() {
        return Err(MiningError::LabelCountMismatch {
            labels: cand_labels.len(),
            rows: cand_emb.rows(),
        });
    }
    if id_emb.dims() != cand_emb.dims() {
        return Err(MiningError::DimMismatch {
            id: id_emb.dims(),
            cand: cand_emb.dims(),
        });
    }
    let (unique, origin) = dedup_candidates(cand_labels);
    if cfg.m > unique.len() {
        return Err(MiningError::MTooLarge {
            m: cfg.m,
            available: unique.len(),
        });
    }
    let cand = if origin.len() == cand_emb.rows() {
        None
    } else {
        Some(cand_emb.select_rows(&origin)?)
    };
    let cand = cand.as_ref().unwrap_or(cand_emb);

    let distances = candidate_distances(id_emb, cand, cfg.eta, cfg.block_rows)?;
    let order = rank_order(&distances);
    let indices: Vec<usize> = order[..cfg.m].to_vec();
    let labels = LabelSet::new(indices.iter().map(|&i| unique.get(i).to_owned()).collect())?;
    let distances = indices.iter().map(|&i| distances[i]).collect();
    Ok(NegativeSelection {
        indices,
        labels,
        distances,
    })
}

/// Embedding rows of the selected negatives, in rank order.
///
/// `cand_emb` and `cand_labels` must be the raw (non-deduplicated) inputs
/// that produced `selection`.
pub fn selected_embeddings(
    selection: &NegativeSelection,
    cand_emb: &Matrix,
    cand_labels: &LabelSet,
) -> Result<Matrix> {
    if cand_labels.len() != cand_emb.rows() {
        return Err(MiningError::LabelCountMismatch {
            labels: cand_labels.len(),
            rows: cand_emb.rows(),
        });
    }
    let (unique, origin) = dedup_candidates(cand_labels);
    let mut rows = Vec::with_capacity(selection.len());
    for &i in &selection.indices {
        if i >= unique.len() {
            return Err(MiningError::MTooLarge {
                m: i + 1,
                available: unique.len(),
            });
        }
        rows.push(origin[i]);
    }
    Ok(cand_emb.select_rows(&rows)?)
}
