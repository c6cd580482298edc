use std::path::{Path, PathBuf};

use neglabel::mining;
use neglabel::scoring::{self, ScoreConfig};
use neglabel::store::{self, Matrix};

use super::mine::{selected_rows, SelectionFile};
use crate::args::{ScoreArgs, ScoreParams};
use crate::failure::{Failure, Result};
use crate::files::{scores_csv, write_text};

impl ScoreParams {
    pub fn config(&self) -> ScoreConfig {
        ScoreConfig {
            variant: self.variant,
            tau: self.tau,
            n_groups: self.n_groups,
            alpha: self.alpha,
            beta: self.beta,
            shuffle_seed: self.shuffle_seed,
        }
    }
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str, why: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| {
        Failure::validation("MissingArgument", format!("--{flag} is required {why}"))
    })
}

/// Negative embeddings named by a selection file, checked against the
/// candidate labels they claim to come from.
pub fn negatives_from_selection(
    selection: &Path,
    cand_emb: &Path,
    cand_labels: &Path,
) -> Result<Matrix> {
    let file = SelectionFile::load(selection)?;
    let rows = file.rows.clone();
    let sel = file.into_selection()?;
    let cand = store::load_matrix(cand_emb)?;
    let labels = store::load_labels(cand_labels)?;
    let (unique, _) = mining::dedup_candidates(&labels);
    if sel.indices.iter().any(|&i| i >= unique.len())
        || sel
            .indices
            .iter()
            .zip(sel.labels.iter())
            .any(|(&i, l)| unique.get(i) != l)
        || selected_rows(&sel, &labels) != rows
    {
        return Err(Failure::validation(
            "SelectionMismatch",
            format!(
                "{} does not match candidates {}",
                selection.display(),
                cand_labels.display()
            ),
        ));
    }
    Ok(mining::selected_embeddings(&sel, &cand, &labels)?)
}

pub fn run(a: &ScoreArgs) -> Result<()> {
    let cfg = a.params.config();
    cfg.validate()?;
    let batch = if let Some(sims) = &a.sims {
        if a.image_emb.is_some()
            || a.id_emb.is_some()
            || a.neg_emb.is_some()
            || a.selection.is_some()
        {
            return Err(Failure::validation(
                "ConflictingArguments",
                "--sims cannot be combined with embedding inputs",
            ));
        }
        let k = a
            .k
            .ok_or_else(|| Failure::validation("MissingArgument", "--k is required with --sims"))?;
        scoring::score_batch(&store::load_matrix(sims)?, k, &cfg)?
    } else {
        let why = "unless --sims is given";
        let images = store::load_matrix(need(&a.image_emb, "image-emb", why)?)?;
        let id = store::load_matrix(need(&a.id_emb, "id-emb", why)?)?;
        let neg = match (&a.neg_emb, &a.selection) {
            (Some(path), None) => store::load_matrix(path)?,
            (None, Some(sel)) => {
                let why = "with --selection";
                negatives_from_selection(
                    sel,
                    need(&a.cand_emb, "cand-emb", why)?,
                    need(&a.cand_labels, "cand-labels", why)?,
                )?
            }
            _ => {
                return Err(Failure::validation(
                    "MissingArgument",
                    "exactly one of --neg-emb or --selection is required",
                ))
            }
        };
        scoring::score_embeddings(&images, &id, &neg, &cfg)?
    };
    write_text(&a.out, &scores_csv(&batch.scores))
}
