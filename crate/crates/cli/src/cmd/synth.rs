use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use neglabel::store::{self, LabelSet};
use neglabel::synth::{self, SynthSpec};
use serde::Serialize;

use crate::args::{SpecOverrides, SynthArgs};
use crate::failure::{Failure, Result};
use crate::files::{mask_text, read_text, sha256_file, to_json, write_text};

pub const MANIFEST_FORMAT: &str = "neglabel-synth";

fn bad_spec(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::validation("SpecInvalid", format!("{}: {e}", path.display()))
}

/// Spec from the optional file with the flag overrides applied on top.
/// `m`, `p1` and `p2` are handled by the caller since `sweep` grids them.
pub fn resolve_spec(o: &SpecOverrides) -> Result<SynthSpec> {
    let mut spec = match &o.spec {
        None => SynthSpec::default(),
        Some(path) => {
            let text = read_text(path)?;
            if path.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text).map_err(|e| bad_spec(path, e))?
            } else {
                toml::from_str(&text).map_err(|e| bad_spec(path, e))?
            }
        }
    };
    if let Some(v) = o.k {
        spec.k = v;
    }
    if let Some(v) = o.n_id {
        spec.n_id = v;
    }
    if let Some(v) = o.n_ood {
        spec.n_ood = v;
    }
    if let Some(v) = o.mu_pos {
        spec.mu_pos = v;
    }
    if let Some(v) = o.mu_neg {
        spec.mu_neg = v;
    }
    if let Some(v) = o.sigma {
        spec.sigma = v;
    }
    if let Some(v) = o.seed {
        spec.seed = v;
    }
    spec.allow_degenerate |= o.allow_degenerate;
    Ok(spec)
}

#[derive(Serialize)]
struct Manifest<'a> {
    format: &'static str,
    version: u32,
    mode: &'static str,
    dim: Option<usize>,
    spec: &'a SynthSpec,
    /// Output file name to SHA-256 hex digest.
    files: BTreeMap<String, String>,
}

pub fn run(a: &SynthArgs) -> Result<()> {
    let mut spec = resolve_spec(&a.spec)?;
    if let Some(v) = a.m {
        spec.m = v;
    }
    if let Some(v) = a.p1 {
        spec.p1 = v;
    }
    if let Some(v) = a.p2 {
        spec.p2 = v;
    }
    let dir = &a.out_dir;
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;

    let mut names = Vec::new();
    let mode = match a.dim {
        None => {
            let data = synth::generate(&spec)?;
            store::save_matrix(&data.sims, dir.join("sims.negl"))?;
            store::save_labels(&data.labels, dir.join("labels.txt"))?;
            write_text(&dir.join("mask.txt"), &mask_text(&data.id_mask))?;
            names.extend(["sims.negl", "labels.txt", "mask.txt"]);
            "similarities"
        }
        Some(dim) => {
            let e = synth::generate_embeddings(&spec, dim)?;
            let (id_labels, neg_labels) = e.labels.as_slice().split_at(spec.k);
            store::save_matrix(&e.images, dir.join("images.negl"))?;
            store::save_matrix(&e.id_labels, dir.join("id_emb.negl"))?;
            store::save_matrix(&e.neg_labels, dir.join("neg_emb.negl"))?;
            store::save_labels(
                &LabelSet::new(id_labels.to_vec())?,
                dir.join("id_labels.txt"),
            )?;
            store::save_labels(
                &LabelSet::new(neg_labels.to_vec())?,
                dir.join("neg_labels.txt"),
            )?;
            store::save_labels(&e.labels, dir.join("labels.txt"))?;
            write_text(&dir.join("mask.txt"), &mask_text(&e.id_mask))?;
            names.extend([
                "images.negl",
                "id_emb.negl",
                "neg_emb.negl",
                "id_labels.txt",
                "neg_labels.txt",
                "labels.txt",
                "mask.txt",
            ]);
            "embeddings"
        }
    };
    let mut files = BTreeMap::new();
    for name in names {
        files.insert(name.to_owned(), sha256_file(&dir.join(name))?);
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT,
        version: 1,
        mode,
        dim: a.dim,
        spec: &spec,
        files,
    };
    write_text(&dir.join("manifest.json"), &to_json(&manifest)?)
}
