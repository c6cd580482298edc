use neglabel::metrics::{self, split_by_mask};
use serde::Serialize;

use super::emit;
use crate::args::EvalArgs;
use crate::failure::{Failure, Result};
use crate::files::{parse_mask, read_scores, read_text, to_json};

#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub auroc: f64,
    pub fpr95: f64,
    pub threshold: f64,
    pub lambda: f64,
    pub n_id: usize,
    pub n_ood: usize,
    pub auroc_percent: String,
    pub fpr95_percent: String,
}

pub fn report(id: &[f64], ood: &[f64], lambda: f64) -> Result<MetricsReport> {
    let m = metrics::evaluate(id, ood, lambda)?;
    Ok(MetricsReport {
        auroc: m.auroc,
        fpr95: m.fpr_at_lambda,
        threshold: m.threshold,
        lambda,
        n_id: m.n_id,
        n_ood: m.n_ood,
        auroc_percent: metrics::percent(m.auroc),
        fpr95_percent: metrics::percent(m.fpr_at_lambda),
    })
}

/// Rejects a TPR target outside (0, 1] before any file is read.
pub fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(metrics::MetricsError::BadLambda(lambda).into())
    }
}

pub fn run(a: &EvalArgs) -> Result<()> {
    check_lambda(a.lambda)?;
    let (id, ood) = match (&a.id_scores, &a.ood_scores, &a.scores, &a.mask) {
        (Some(i), Some(o), None, None) => (read_scores(i)?, read_scores(o)?),
        (None, None, Some(s), Some(m)) => {
            let scores = read_scores(s)?;
            let mask = parse_mask(&read_text(m)?, m)?;
            if mask.len() != scores.len() {
                return Err(Failure::validation(
                    "MaskLengthMismatch",
                    format!("{} scores but {} mask entries", scores.len(), mask.len()),
                ));
            }
            split_by_mask(&scores, &mask)
        }
        _ => {
            return Err(Failure::validation(
                "MissingArgument",
                "give --id-scores and --ood-scores, or --scores and --mask",
            ))
        }
    };
    emit(a.out.as_deref(), &to_json(&report(&id, &ood, a.lambda)?)?)
}
