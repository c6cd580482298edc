//! Threshold detection and OOD benchmark metrics.

use thiserror::Error;

pub const DEFAULT_LAMBDA: f64 = 0.95;

const RANK_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{0} score list is empty")]
    EmptyList(&'static str),
    #[error("{0} scores contain a non-finite value")]
    NonFinite(&'static str),
    #[error("TPR target {0} is outside (0, 1]")]
    BadLambda(f64),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Id,
    Ood,
}

/// A sample is ID iff its score reaches the threshold (inclusive).
pub fn detect(score: f64, gamma: f64) -> Decision {
    if score >= gamma {
        Decision::Id
    } else {
        Decision::Ood
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMetrics {
    pub auroc: f64,
    pub fpr_at_lambda: f64,
    pub lambda: f64,
    pub threshold: f64,
    pub n_id: usize,
    pub n_ood: usize,
}

fn check(scores: &[f64], which: &'static str) -> Result<()> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyList(which));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite(which));
    }
    Ok(())
}

/// Area under the ROC curve, `P(id > ood) + P(id = ood) / 2`.
///
/// Computed from the rank sum of the ID scores in the pooled sample, with
/// tied scores sharing their average rank.
pub fn auroc(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores, "ID")?;
    check(ood_scores, "OOD")?;
    let (n_id, n_ood) = (id_scores.len(), ood_scores.len());
    let mut pooled: Vec<(f64, bool)> = id_scores
        .iter()
        .map(|&s| (s, true))
        .chain(ood_scores.iter().map(|&s| (s, false)))
        .collect();
    pooled.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    // Ranks are 1-based; a tie block spanning positions i..j gets (i + 1 + j) / 2.
    let mut rank_sum = 0.0f64;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let ids_in_block = pooled[i..j].iter().filter(|p| p.1).count();
        if ids_in_block > 0 {
            let avg_rank = (i + 1 + j) as f64 / 2.0;
            rank_sum += avg_rank * ids_in_block as f64;
        }
        i = j;
    }
    let n1 = n_id as f64;
    let u = rank_sum - n1 * (n1 + 1.0) / 2.0;
    Ok(u / (n1 * n_ood as f64))
}

/// Nearest-rank position `ceil(lambda * n)` (1-based) of the TPR threshold.
pub fn threshold_rank(lambda: f64, n: usize) -> usize {
    let r = (lambda * n as f64 - RANK_EPS).ceil() as usize;
    r.clamp(1, n)
}

/// FPR on OOD scores at the threshold that keeps at least `lambda` of the
/// ID scores. Returns `(fpr, threshold)`.
///
/// The threshold is the `ceil(lambda * n_id)`-th largest ID score; OOD
/// scores equal to it count as false positives.
pub fn fpr_at_tpr(id_scores: &[f64], ood_scores: &[f64], lambda: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(MetricsError::BadLambda(lambda));
    }
    check(id_scores, "ID")?;
    check(ood_scores, "OOD")?;
    let mut sorted = id_scores.to_vec();
    let rank = threshold_rank(lambda, sorted.len());
    let (_, gamma, _) = sorted.select_nth_unstable_by(rank - 1, |a, b| b.total_cmp(a));
    let gamma = *gamma;
    let fp = ood_scores
        .iter()
        .filter(|&&s| detect(s, gamma) == Decision::Id)
        .count();
    Ok((fp as f64 / ood_scores.len() as f64, gamma))
}

pub fn evaluate(id_scores: &[f64], ood_scores: &[f64], lambda: f64) -> Result<DetectionMetrics> {
    let (fpr, threshold) = fpr_at_tpr(id_scores, ood_scores, lambda)?;
    Ok(DetectionMetrics {
        auroc: auroc(id_scores, ood_scores)?,
        fpr_at_lambda: fpr,
        lambda,
        threshold,
        n_id: id_scores.len(),
        n_ood: ood_scores.len(),
    })
}

/// Splits a score vector into (ID, OOD) lists according to a mask.
pub fn split_by_mask(scores: &[f64], is_id: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let mut id = Vec::new();
    let mut ood = Vec::new();
    for (&s, &m) in scores.iter().zip(is_id) {
        if m {
            id.push(s);
        } else {
            ood.push(s);
        }
    }
    (id, ood)
}

/// Formats a rate in `[0, 1]` as a percentage with two decimals.
pub fn percent(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}
