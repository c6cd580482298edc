use std::fmt::Write as _;

use neglabel::metrics::{self, split_by_mask};
use neglabel::mining::{self, MiningConfig};
use neglabel::scoring::{self, ScoreConfig, ScoreVariant};
use neglabel::store::{self, Matrix};
use neglabel::synth::{self, SynthSpec};

use super::emit;
use super::synth::resolve_spec;
use crate::args::SweepArgs;
use crate::failure::{Failure, Result};
use crate::files::{parse_mask, read_text};

pub const HEADER: &str = "variant,eta,m,tau,n_groups,p1,p2,auroc,fpr,threshold";

fn score_configs(a: &SweepArgs) -> Vec<ScoreConfig> {
    let mut out = Vec::new();
    for &variant in &a.variant {
        for &tau in &a.tau {
            for &n_groups in &a.n_groups {
                out.push(ScoreConfig {
                    variant,
                    tau,
                    n_groups,
                    alpha: a.alpha,
                    beta: a.beta,
                    shuffle_seed: None,
                });
            }
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Cell {
    variant: ScoreVariant,
    eta: Option<f64>,
    m: usize,
    tau: f64,
    n_groups: usize,
    p1: Option<f64>,
    p2: Option<f64>,
}

fn push_row(out: &mut String, c: &Cell, scores: &[f64], mask: &[bool], lambda: f64) -> Result<()> {
    let (id, ood) = split_by_mask(scores, mask);
    let r = metrics::evaluate(&id, &ood, lambda)?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        c.variant,
        opt(c.eta),
        c.m,
        c.tau,
        c.n_groups,
        opt(c.p1),
        opt(c.p2),
        r.auroc,
        r.fpr_at_lambda,
        r.threshold
    )
    .expect("write to String");
    Ok(())
}

fn synthetic(a: &SweepArgs, base: &SynthSpec, out: &mut String) -> Result<()> {
    let configs = score_configs(a);
    for &p1 in &a.p1 {
        for &p2 in &a.p2 {
            for &m in &a.m {
                let spec = SynthSpec {
                    m,
                    p1,
                    p2,
                    ..base.clone()
                };
                let data = synth::generate(&spec)?;
                for cfg in &configs {
                    let batch = scoring::score_batch(&data.sims, spec.k, cfg)?;
                    let cell = Cell {
                        variant: cfg.variant,
                        eta: None,
                        m,
                        tau: cfg.tau,
                        n_groups: cfg.n_groups,
                        p1: Some(p1),
                        p2: Some(p2),
                    };
                    push_row(out, &cell, &batch.scores, &data.id_mask, a.lambda)?;
                }
            }
        }
    }
    Ok(())
}

fn embedding(a: &SweepArgs, out: &mut String) -> Result<()> {
    let path = |p: &Option<std::path::PathBuf>, flag: &str| {
        p.clone().ok_or_else(|| {
            Failure::validation(
                "MissingArgument",
                format!("--{flag} is required in embedding mode"),
            )
        })
    };
    let id = store::load_matrix(path(&a.id_emb, "id-emb")?)?;
    let cand = store::load_matrix(path(&a.cand_emb, "cand-emb")?)?;
    let labels = store::load_labels(path(&a.cand_labels, "cand-labels")?)?;
    let images = store::load_matrix(path(&a.image_emb, "image-emb")?)?;
    let mask_path = path(&a.mask, "mask")?;
    let mask = parse_mask(&read_text(&mask_path)?, &mask_path)?;
    if mask.len() != images.rows() {
        return Err(Failure::validation(
            "MaskLengthMismatch",
            format!("{} images but {} mask entries", images.rows(), mask.len()),
        ));
    }
    let configs = score_configs(a);
    let max_m = a.m.iter().copied().max().unwrap_or(0);
    for &eta in &a.eta {
        // The top-m selection is a prefix of the top-max_m one.
        let sel = mining::mine(&id, &cand, &labels, &MiningConfig::new(eta, max_m))?;
        let all_neg = mining::selected_embeddings(&sel, &cand, &labels)?;
        for &m in &a.m {
            let rows: Vec<usize> = (0..m).collect();
            let neg: Matrix = all_neg.select_rows(&rows)?;
            for cfg in &configs {
                let batch = scoring::score_embeddings(&images, &id, &neg, cfg)?;
                let cell = Cell {
                    variant: cfg.variant,
                    eta: Some(eta),
                    m,
                    tau: cfg.tau,
                    n_groups: cfg.n_groups,
                    p1: None,
                    p2: None,
                };
                push_row(out, &cell, &batch.scores, &mask, a.lambda)?;
            }
        }
    }
    Ok(())
}

pub fn run(a: &SweepArgs) -> Result<()> {
    super::eval::check_lambda(a.lambda)?;
    for cfg in score_configs(a) {
        cfg.validate()?;
    }
    let mut out = String::from(HEADER);
    out.push('\n');
    if a.id_emb.is_some() {
        embedding(a, &mut out)?;
    } else {
        synthetic(a, &resolve_spec(&a.spec)?, &mut out)?;
    }
    emit(a.out.as_deref(), &out)
}
