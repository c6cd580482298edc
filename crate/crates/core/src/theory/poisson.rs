//! Poisson-binomial laws: the count of successes among independent
//! Bernoulli trials with heterogeneous probabilities.

use super::{normal_cdf, Result, TheoryError};

/// Largest number of trials accepted by the exact O(n^2) PMF.
pub const MAX_EXACT_TERMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonBinomial {
    probs: Vec<f64>,
}

/// Mean and standard deviation of the Gaussian limit, plus the Lyapunov
/// ratio bound `2 / (c1^{3/2} sqrt(M))` with
/// `c1 = min(p_min - p_min^2, p_max - p_max^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalApprox {
    pub mu: f64,
    pub sigma: f64,
    pub lyapunov_bound: f64,
}

impl PoissonBinomial {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(TheoryError::Domain("probability list is empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(TheoryError::Domain(format!(
                "probability {p} must lie in (0, 1)"
            )));
        }
        Ok(PoissonBinomial { probs })
    }

    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        self.probs.iter().map(|p| p * (1.0 - p)).sum()
    }

    /// Exact PMF over `0..=n` by adding one trial at a time.
    pub fn pmf(&self) -> Result<Vec<f64>> {
        let n = self.probs.len();
        if n > MAX_EXACT_TERMS {
            return Err(TheoryError::TooManyTerms(n));
        }
        let mut pmf = vec![0.0f64; n + 1];
        pmf[0] = 1.0;
        for (i, &p) in self.probs.iter().enumerate() {
            let q = 1.0 - p;
            for k in (1..=i + 1).rev() {
                pmf[k] = pmf[k] * q + pmf[k - 1] * p;
            }
            pmf[0] *= q;
        }
        Ok(pmf)
    }

    pub fn normal_approx(&self) -> NormalApprox {
        let p_min = self.probs.iter().copied().fold(f64::INFINITY, f64::min);
        let p_max = self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let c1 = (p_min - p_min * p_min).min(p_max - p_max * p_max);
        let m = self.probs.len() as f64;
        NormalApprox {
            mu: self.mean(),
            sigma: self.variance().sqrt(),
            lyapunov_bound: 2.0 / (c1.powf(1.5) * m.sqrt()),
        }
    }
}

/// `B(n, p)` PMF from the closed form, evaluated in log space.
pub fn binomial_pmf(n: usize, p: f64) -> Result<Vec<f64>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(TheoryError::Domain(format!("p = {p} must lie in (0, 1)")));
    }
    let nf = n as f64;
    let ln_n_fact = libm::lgamma(nf + 1.0);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    Ok((0..=n)
        .map(|k| {
            let kf = k as f64;
            let ln_choose = ln_n_fact - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0);
            (ln_choose + kf * lp + (nf - kf) * lq).exp()
        })
        .collect())
}

/// Total-variation distance between a PMF on `0..=n` and a normal law
/// discretized onto the integers with unit bins centered on each count.
/// Normal mass falling outside `[-0.5, n + 0.5]` counts as mismatch.
pub fn discretized_normal_tv(pmf: &[f64], mu: f64, sigma: f64) -> Result<f64> {
    let mut prev = normal_cdf(-0.5, mu, sigma)?;
    let mut tv = prev;
    for (k, &mass) in pmf.iter().enumerate() {
        let next = normal_cdf(k as f64 + 0.5, mu, sigma)?;
        tv += (mass - (next - prev)).abs();
        prev = next;
    }
    tv += 1.0 - prev;
    Ok(0.5 * tv)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Enumerates all 2^n outcomes.
    fn enumerate_pmf(probs: &[f64]) -> Vec<f64> {
        let n = probs.len();
        let mut pmf = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let mut pr = 1.0;
            for (i, p) in probs.iter().enumerate() {
                pr *= if mask >> i & 1 == 1 { *p } else { 1.0 - p };
            }
            pmf[mask.count_ones() as usize] += pr;
        }
        pmf
    }

    #[test]
    fn three_term_example() {
        let pb = PoissonBinomial::new(vec![0.1, 0.5, 0.9]).unwrap();
        let pmf = pb.pmf().unwrap();
        let expected = [0.045, 0.455, 0.455, 0.045];
        for (a, b) in pmf.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in pmf.iter().zip(enumerate_pmf(pb.probs())) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((pb.mean() - 1.5).abs() < 1e-12);
        assert!((pb.variance() - 0.43).abs() < 1e-12);
        let na = pb.normal_approx();
        assert!((na.sigma - 0.43f64.sqrt()).abs() < 1e-12);
        // c1 = min(0.09, 0.09)
        assert!((na.lyapunov_bound - 2.0 / (0.09f64.powf(1.5) * 3f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn single_term() {
        let pmf = PoissonBinomial::new(vec![0.3]).unwrap().pmf().unwrap();
        assert!((pmf[0] - 0.7).abs() < 1e-15 && (pmf[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn random_probs_match_enumeration() {
        let probs = [0.12, 0.77, 0.31, 0.5, 0.05, 0.93, 0.64, 0.28, 0.41, 0.88];
        let pb = PoissonBinomial::new(probs.to_vec()).unwrap();
        for (a, b) in pb.pmf().unwrap().iter().zip(enumerate_pmf(&probs)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn guards() {
        assert!(PoissonBinomial::new(vec![]).is_err());
        assert!(PoissonBinomial::new(vec![0.2, 1.0]).is_err());
        let big = PoissonBinomial::uniform(MAX_EXACT_TERMS + 1, 0.5).unwrap();
        assert!(matches!(big.pmf(), Err(TheoryError::TooManyTerms(_))));
    }

    #[test]
    fn binomial_closed_form_sums_to_one() {
        let pmf = binomial_pmf(200, 0.15).unwrap();
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((binomial_pmf(2, 0.5).unwrap()[1] - 0.5).abs() < 1e-15);
    }
}
