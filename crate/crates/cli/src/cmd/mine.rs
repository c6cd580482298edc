use std::collections::BTreeMap;
use std::path::Path;

use neglabel::mining::{self, MiningConfig, NegativeSelection};
use neglabel::store::{self, LabelSet};
use serde::{Deserialize, Serialize};

use crate::args::MineArgs;
use crate::failure::{Failure, Result};
use crate::files::{read_text, sha256_file, to_json, write_text};

pub const SELECTION_FORMAT: &str = "neglabel-selection";
pub const SELECTION_VERSION: u32 = 1;

/// On-disk selection. `indices` count positions in the deduplicated
/// candidate list; `rows` are the matching rows of the candidate file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionFile {
    pub format: String,
    pub version: u32,
    pub eta: f64,
    pub m: usize,
    pub indices: Vec<usize>,
    pub rows: Vec<usize>,
    pub labels: Vec<String>,
    pub distances: Vec<f64>,
    /// Input file name to SHA-256 hex digest.
    pub provenance: BTreeMap<String, String>,
}

impl SelectionFile {
    pub fn load(path: &Path) -> Result<SelectionFile> {
        let sel: SelectionFile = serde_json::from_str(&read_text(path)?).map_err(|e| {
            Failure::validation("BadSelectionFile", format!("{}: {e}", path.display()))
        })?;
        if sel.format != SELECTION_FORMAT || sel.version != SELECTION_VERSION {
            return Err(Failure::validation(
                "BadSelectionFile",
                format!(
                    "{}: not a {SELECTION_FORMAT} v{SELECTION_VERSION} file",
                    path.display()
                ),
            ));
        }
        let n = sel.indices.len();
        if sel.labels.len() != n || sel.distances.len() != n || sel.rows.len() != n || sel.m != n {
            return Err(Failure::validation(
                "BadSelectionFile",
                format!("{}: field lengths disagree", path.display()),
            ));
        }
        Ok(sel)
    }

    pub fn into_selection(self) -> Result<NegativeSelection> {
        Ok(NegativeSelection {
            indices: self.indices,
            labels: LabelSet::new(self.labels)?,
            distances: self.distances,
        })
    }
}

/// Candidate-file row of each selected entry.
pub fn selected_rows(sel: &NegativeSelection, cand_labels: &LabelSet) -> Vec<usize> {
    let (_, origin) = mining::dedup_candidates(cand_labels);
    sel.indices.iter().map(|&i| origin[i]).collect()
}

pub fn run(a: &MineArgs) -> Result<()> {
    let cfg = MiningConfig {
        eta: a.eta,
        m: a.m,
        block_rows: a.block_rows,
    };
    cfg.validate()?;
    let id = store::load_matrix(&a.id_emb)?;
    let cand = store::load_matrix(&a.cand_emb)?;
    let labels = store::load_labels(&a.cand_labels)?;
    for m in [&id, &cand] {
        m.expect_kind(store::MatrixKind::Embeddings)?;
    }
    let sel = mining::mine(&id, &cand, &labels, &cfg)?;

    let mut provenance = BTreeMap::new();
    for (key, path) in [
        ("id_emb", &a.id_emb),
        ("cand_emb", &a.cand_emb),
        ("cand_labels", &a.cand_labels),
    ] {
        provenance.insert(format!("{key}_sha256"), sha256_file(path)?);
    }
    let file = SelectionFile {
        format: SELECTION_FORMAT.into(),
        version: SELECTION_VERSION,
        eta: a.eta,
        m: a.m,
        indices: sel.indices.clone(),
        rows: selected_rows(&sel, &labels),
        labels: sel.labels.as_slice().to_vec(),
        distances: sel.distances.clone(),
        provenance,
    };
    write_text(&a.out, &to_json(&file)?)?;

    if let Some(path) = &a.neg_emb_out {
        let neg = mining::selected_embeddings(&sel, &cand, &labels)?;
        store::save_matrix(&neg, path)?;
    }
    if let Some(path) = &a.neg_labels_out {
        store::save_labels(&sel.labels, path)?;
    }
    Ok(())
}
