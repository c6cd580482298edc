//! Seeded Monte Carlo simulation of positive counts.
//!
//! Random streams come from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Work is split into shards; shard
//! `s` of the ID population uses the base stream advanced by `s` jumps of
//! 2^128 steps, and shard `s` of the OOD population by `shards + s` jumps.
//! Output is a deterministic function of `(seed, shards)` regardless of
//! how many threads execute the shards.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use super::{PoissonBinomial, Result, TheoryError, TheoryParams};
use crate::metrics;

/// Law of one sample's positive count.
#[derive(Debug, Clone, PartialEq)]
pub enum CountModel {
    Binomial { m: usize, p: f64 },
    PoissonBinomial(PoissonBinomial),
}

impl CountModel {
    pub fn trials(&self) -> usize {
        match self {
            CountModel::Binomial { m, .. } => *m,
            CountModel::PoissonBinomial(pb) => pb.len(),
        }
    }

    fn sampler(&self) -> Result<Vec<Bernoulli>> {
        let mk = |p: f64| {
            Bernoulli::new(p).map_err(|e| TheoryError::Domain(format!("bernoulli({p}): {e}")))
        };
        match self {
            CountModel::Binomial { m, p } => Ok(vec![mk(*p)?; *m]),
            CountModel::PoissonBinomial(pb) => pb.probs().iter().map(|&p| mk(p)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub n_id: usize,
    pub n_ood: usize,
    pub seed: u64,
    pub shards: usize,
}

impl SimulationConfig {
    pub fn new(n_id: usize, n_ood: usize, seed: u64) -> Self {
        SimulationConfig {
            n_id,
            n_ood,
            seed,
            shards: 1,
        }
    }

    pub fn with_shards(self, shards: usize) -> Self {
        SimulationConfig { shards, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    pub id: Vec<u32>,
    pub ood: Vec<u32>,
}

fn shard_streams(seed: u64, count: usize) -> Vec<Xoshiro256PlusPlus> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(rng.clone());
        rng.jump();
    }
    out
}

fn shard_sizes(n: usize, shards: usize) -> Vec<usize> {
    (0..shards)
        .map(|s| n / shards + usize::from(s < n % shards))
        .collect()
}

fn draw_counts<R: Rng>(rng: &mut R, trials: &[Bernoulli], n: usize) -> Vec<u32> {
    (0..n)
        .map(|_| trials.iter().filter(|b| b.sample(rng)).count() as u32)
        .collect()
}

/// Draws `n_id` counts from `id_model` and `n_ood` counts from `ood_model`,
/// each count a sum of Bernoulli trials.
pub fn simulate_counts(
    id_model: &CountModel,
    ood_model: &CountModel,
    cfg: &SimulationConfig,
) -> Result<Counts> {
    if cfg.n_id == 0 || cfg.n_ood == 0 {
        return Err(TheoryError::Domain("sample counts must be positive".into()));
    }
    let shards = cfg.shards.max(1);
    let id_trials = id_model.sampler()?;
    let ood_trials = ood_model.sampler()?;
    let streams = shard_streams(cfg.seed, 2 * shards);

    let jobs: Vec<(usize, usize)> = shard_sizes(cfg.n_id, shards)
        .into_iter()
        .enumerate()
        .chain(
            shard_sizes(cfg.n_ood, shards)
                .into_iter()
                .enumerate()
                .map(|(s, n)| (shards + s, n)),
        )
        .collect();
    let parts: Vec<Vec<u32>> = jobs
        .par_iter()
        .map(|&(stream, n)| {
            let mut rng = streams[stream].clone();
            let trials = if stream < shards {
                &id_trials
            } else {
                &ood_trials
            };
            draw_counts(&mut rng, trials, n)
        })
        .collect();
    let mut parts = parts.into_iter();
    let id = parts.by_ref().take(shards).flatten().collect();
    let ood = parts.flatten().collect();
    Ok(Counts { id, ood })
}

/// Toy score `-c` for each count.
pub fn toy_scores(counts: &[u32]) -> Vec<f64> {
    counts.iter().map(|&c| -(c as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloFpr {
    pub fpr: f64,
    /// Binomial standard error `sqrt(fpr (1 - fpr) / n_ood)`.
    pub stderr: f64,
    pub threshold: f64,
}

/// Empirical FPR at TPR `lambda` of the toy score on simulated binomial
/// counts; `tp.m` must be a whole number.
pub fn empirical_fpr(tp: &TheoryParams, cfg: &SimulationConfig) -> Result<MonteCarloFpr> {
    tp.validate()?;
    if tp.m.fract() != 0.0 {
        return Err(TheoryError::Domain(format!(
            "simulation needs a whole number of labels, got M = {}",
            tp.m
        )));
    }
    let m = tp.m as usize;
    let counts = simulate_counts(
        &CountModel::Binomial { m, p: tp.p1 },
        &CountModel::Binomial { m, p: tp.p2 },
        cfg,
    )?;
    let (fpr, threshold) =
        metrics::fpr_at_tpr(&toy_scores(&counts.id), &toy_scores(&counts.ood), tp.lambda)?;
    Ok(MonteCarloFpr {
        fpr,
        stderr: (fpr * (1.0 - fpr) / cfg.n_ood as f64).sqrt(),
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let model = CountModel::Binomial { m: 50, p: 0.2 };
        let cfg = SimulationConfig::new(1000, 700, 42);
        let a = simulate_counts(&model, &model, &cfg).unwrap();
        let b = simulate_counts(&model, &model, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.id.len(), a.ood.len()), (1000, 700));
        let c = simulate_counts(&model, &model, &SimulationConfig::new(1000, 700, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shards_define_output_not_threads() {
        let model = CountModel::Binomial { m: 20, p: 0.3 };
        let cfg = SimulationConfig::new(501, 333, 9).with_shards(4);
        let a = simulate_counts(&model, &model, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| simulate_counts(&model, &model, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.id.len(), 501);
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let (m, p, n) = (100usize, 0.05, 100_000usize);
        let counts = simulate_counts(
            &CountModel::Binomial { m, p },
            &CountModel::Binomial { m, p: 0.15 },
            &SimulationConfig::new(n, 10, 1234),
        )
        .unwrap();
        let mean = counts.id.iter().map(|&c| c as f64).sum::<f64>() / n as f64;
        let sigma = (m as f64 * p * (1.0 - p)).sqrt();
        assert!((mean - m as f64 * p).abs() <= 4.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn poisson_binomial_model_counts_bounded() {
        let pb = PoissonBinomial::new(vec![0.1, 0.5, 0.9]).unwrap();
        let counts = simulate_counts(
            &CountModel::PoissonBinomial(pb.clone()),
            &CountModel::PoissonBinomial(pb),
            &SimulationConfig::new(2000, 2000, 5),
        )
        .unwrap();
        assert!(counts.id.iter().all(|&c| c <= 3));
        let mean = counts.id.iter().map(|&c| c as f64).sum::<f64>() / 2000.0;
        assert!((mean - 1.5).abs() < 4.0 * (0.43f64 / 2000.0).sqrt());
    }

    #[test]
    fn fractional_m_rejected() {
        let tp = TheoryParams::new(10.5, 0.1, 0.2, 0.9).unwrap();
        assert!(empirical_fpr(&tp, &SimulationConfig::new(10, 10, 0)).is_err());
    }
}
