//! Synthetic similarity matrices following the binomial matching model.
//!
//! Cosines come from two clusters: "matched" pairs drawn from
//! `N(mu_pos, sigma)` and unmatched pairs from `N(mu_neg, sigma)`. An ID
//! sample matches exactly one ID label (its planted class) and each
//! negative label independently with probability `p1`; an OOD sample
//! matches no ID label and each negative label with probability `p2`.
//!
//! Rows are ID samples first, then OOD samples. Columns are the `k` ID
//! labels followed by the `m` negative labels. Generation is
//! single-threaded: the seed stream order defines the output.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_distr::{Normal, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{normalize_rows, LabelSet, Matrix, StoreError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    SpecInvalid(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub k: usize,
    pub m: usize,
    pub n_id: usize,
    pub n_ood: usize,
    pub p1: f64,
    pub p2: f64,
    pub mu_pos: f64,
    pub mu_neg: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Permits `p1 >= p2`.
    pub allow_degenerate: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            k: 10,
            m: 1000,
            n_id: 1000,
            n_ood: 1000,
            p1: 0.05,
            p2: 0.15,
            mu_pos: 0.3,
            mu_neg: 0.1,
            sigma: 0.02,
            seed: 0,
            allow_degenerate: false,
        }
    }
}

fn invalid<T>(msg: String) -> Result<T> {
    Err(SynthError::SpecInvalid(msg))
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k", self.k),
            ("m", self.m),
            ("n_id", self.n_id),
            ("n_ood", self.n_ood),
        ] {
            if v == 0 {
                return invalid(format!("{name} must be at least 1"));
            }
        }
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(p > 0.0 && p < 1.0) {
                return invalid(format!("{name} = {p} must lie in (0, 1)"));
            }
        }
        if self.p1 >= self.p2 && !self.allow_degenerate {
            return invalid(format!(
                "p1 = {} must be below p2 = {} (set allow_degenerate to override)",
                self.p1, self.p2
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return invalid(format!("sigma = {} must be positive", self.sigma));
        }
        if self.mu_neg.is_nan() || self.mu_pos.is_nan() || self.mu_neg >= self.mu_pos {
            return invalid(format!(
                "mu_neg = {} must be below mu_pos = {}",
                self.mu_neg, self.mu_pos
            ));
        }
        for mu in [self.mu_pos, self.mu_neg] {
            if mu - 5.0 * self.sigma < -1.0 || mu + 5.0 * self.sigma > 1.0 {
                return invalid(format!(
                    "mean {mu} +- 5 sigma leaves [-1, 1] (sigma = {})",
                    self.sigma
                ));
            }
        }
        let cells = (self.n_id + self.n_ood).checked_mul(self.k + self.m);
        if cells.is_none_or(|c| c > u32::MAX as usize) {
            return invalid("matrix is too large".into());
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.n_id + self.n_ood
    }

    pub fn n_labels(&self) -> usize {
        self.k + self.m
    }

    /// `id_0..id_{k-1}` followed by `neg_0..neg_{m-1}`.
    pub fn labels(&self) -> LabelSet {
        let labels = (0..self.k)
            .map(|i| format!("id_{i}"))
            .chain((0..self.m).map(|j| format!("neg_{j}")))
            .collect();
        LabelSet::new(labels).expect("generated labels are non-empty")
    }

    /// `true` for the first `n_id` rows.
    pub fn id_mask(&self) -> Vec<bool> {
        (0..self.n_samples()).map(|i| i < self.n_id).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub sims: Matrix,
    pub id_mask: Vec<bool>,
    pub labels: LabelSet,
    /// Planted class of each ID row.
    pub true_class: Vec<usize>,
}

fn draw(rng: &mut Xoshiro256PlusPlus, d: &Normal<f64>) -> f32 {
    (d.sample(rng) as f32).clamp(-1.0, 1.0)
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let pos =
        Normal::new(spec.mu_pos, spec.sigma).map_err(|e| SynthError::SpecInvalid(e.to_string()))?;
    let neg =
        Normal::new(spec.mu_neg, spec.sigma).map_err(|e| SynthError::SpecInvalid(e.to_string()))?;
    let coin_id = Bernoulli::new(spec.p1).map_err(|e| SynthError::SpecInvalid(e.to_string()))?;
    let coin_ood = Bernoulli::new(spec.p2).map_err(|e| SynthError::SpecInvalid(e.to_string()))?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);

    let cols = spec.n_labels();
    let mut data = Vec::with_capacity(spec.n_samples() * cols);
    let mut true_class = Vec::with_capacity(spec.n_id);
    for _ in 0..spec.n_id {
        let class = rng.random_range(0..spec.k);
        true_class.push(class);
        for j in 0..spec.k {
            let d = if j == class { &pos } else { &neg };
            data.push(draw(&mut rng, d));
        }
        for _ in 0..spec.m {
            let d = if coin_id.sample(&mut rng) { &pos } else { &neg };
            data.push(draw(&mut rng, d));
        }
    }
    for _ in 0..spec.n_ood {
        for _ in 0..spec.k {
            data.push(draw(&mut rng, &neg));
        }
        for _ in 0..spec.m {
            let d = if coin_ood.sample(&mut rng) {
                &pos
            } else {
                &neg
            };
            data.push(draw(&mut rng, d));
        }
    }
    Ok(SynthData {
        sims: Matrix::similarities(spec.n_samples(), cols, data)?,
        id_mask: spec.id_mask(),
        labels: spec.labels(),
        true_class,
    })
}

/// Unit embeddings for images, ID labels and negative labels whose cosines
/// loosely follow the matching model. Only the cluster structure (matched
/// pairs are more similar than unmatched ones) is reproduced, not the exact
/// cluster means.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthEmbeddings {
    pub images: Matrix,
    pub id_labels: Matrix,
    pub neg_labels: Matrix,
    pub id_mask: Vec<bool>,
    pub labels: LabelSet,
    pub true_class: Vec<usize>,
}

fn gaussian_unit(rng: &mut Xoshiro256PlusPlus, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn generate_embeddings(spec: &SynthSpec, dim: usize) -> Result<SynthEmbeddings> {
    spec.validate()?;
    if dim < 2 {
        return invalid(format!("embedding dimension {dim} must be at least 2"));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let coin_id = Bernoulli::new(spec.p1).map_err(|e| SynthError::SpecInvalid(e.to_string()))?;
    let coin_ood = Bernoulli::new(spec.p2).map_err(|e| SynthError::SpecInvalid(e.to_string()))?;

    // Labels share a common direction so that unmatched pairs have a
    // positive baseline cosine; the private parts are nearly orthogonal.
    let shared = gaussian_unit(&mut rng, dim);
    let share = std::f64::consts::FRAC_1_SQRT_2;
    let private: Vec<Vec<f64>> = (0..spec.n_labels())
        .map(|_| gaussian_unit(&mut rng, dim))
        .collect();
    let mut label_data = Vec::with_capacity(spec.n_labels() * dim);
    for g in &private {
        label_data.extend(
            g.iter()
                .zip(&shared)
                .map(|(g, u)| (share * u + share * g) as f32),
        );
    }

    let base = spec.mu_neg / share;
    let lift = (spec.mu_pos - spec.mu_neg) / share;
    let mut image_data = Vec::with_capacity(spec.n_samples() * dim);
    let mut true_class = Vec::with_capacity(spec.n_id);
    for row in 0..spec.n_samples() {
        let is_id = row < spec.n_id;
        let mut v: Vec<f64> = shared.iter().map(|u| base * u).collect();
        let add = |v: &mut Vec<f64>, label: usize| {
            for (x, g) in v.iter_mut().zip(&private[label]) {
                *x += lift * g;
            }
        };
        if is_id {
            let class = rng.random_range(0..spec.k);
            true_class.push(class);
            add(&mut v, class);
        }
        let coin = if is_id { &coin_id } else { &coin_ood };
        for j in 0..spec.m {
            if coin.sample(&mut rng) {
                add(&mut v, spec.k + j);
            }
        }
        let noise = gaussian_unit(&mut rng, dim);
        for (x, n) in v.iter_mut().zip(&noise) {
            *x += 0.5 * n;
        }
        image_data.extend(v.into_iter().map(|x| x as f32));
    }

    let labels = normalize_rows(spec.n_labels(), dim, &label_data)?;
    let id_rows: Vec<usize> = (0..spec.k).collect();
    let neg_rows: Vec<usize> = (spec.k..spec.n_labels()).collect();
    Ok(SynthEmbeddings {
        images: normalize_rows(spec.n_samples(), dim, &image_data)?,
        id_labels: labels.select_rows(&id_rows)?,
        neg_labels: labels.select_rows(&neg_rows)?,
        id_mask: spec.id_mask(),
        labels: spec.labels(),
        true_class,
    })
}
