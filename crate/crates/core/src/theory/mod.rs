//! Separability theory for the positive-count toy score.
//!
//! Each of `M` negative labels fires for an input independently with
//! probability `p1` (ID inputs) or `p2` (OOD inputs). The toy score is the
//! negated positive count, so ID counts follow `B(M, p1)` and OOD counts
//! `B(M, p2)`. Under the Gaussian approximation of both binomials the
//! false-positive rate at TPR `lambda` has a closed form; this module
//! provides it, its derivative in `M`, exact Poisson-binomial laws for
//! heterogeneous label probabilities, and a seeded Monte Carlo simulator
//! to check all of it.

mod poisson;
mod simulate;
mod special;

use std::f64::consts::PI;

use thiserror::Error;

pub use poisson::{
    binomial_pmf, discretized_normal_tv, NormalApprox, PoissonBinomial, MAX_EXACT_TERMS,
};
pub use simulate::{
    empirical_fpr, simulate_counts, toy_scores, CountModel, Counts, MonteCarloFpr, SimulationConfig,
};
pub use special::{erf, erfc, erfinv, normal_cdf, normal_pdf, normal_quantile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0} terms exceed the exact-PMF limit of {MAX_EXACT_TERMS}")]
    TooManyTerms(usize),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

pub type Result<T> = std::result::Result<T, TheoryError>;

/// Parameters of the binomial toy model.
///
/// `m` is kept real-valued so that derivatives and finite differences in
/// `M` are well defined; simulations require it to be integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub m: f64,
    pub p1: f64,
    pub p2: f64,
    pub lambda: f64,
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(TheoryError::Domain(format!(
            "{name} = {v} must lie in (0, 1)"
        )));
    }
    Ok(())
}

impl TheoryParams {
    pub fn new(m: f64, p1: f64, p2: f64, lambda: f64) -> Result<Self> {
        let tp = TheoryParams { m, p1, p2, lambda };
        tp.validate()?;
        Ok(tp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 1.0 && self.m.is_finite()) {
            return Err(TheoryError::Domain(format!("M = {} must be >= 1", self.m)));
        }
        open_unit("p1", self.p1)?;
        open_unit("p2", self.p2)?;
        open_unit("lambda", self.lambda)
    }

    pub fn with_m(&self, m: f64) -> Self {
        TheoryParams { m, ..*self }
    }

    /// The argument of `erf` in the closed-form FPR.
    pub fn z(&self) -> Result<f64> {
        self.validate()?;
        let (p1, p2) = (self.p1, self.p2);
        let var1 = p1 * (1.0 - p1);
        let var2 = p2 * (1.0 - p2);
        let spread = (var1 / var2).sqrt() * erfinv(2.0 * self.lambda - 1.0)?;
        let shift = self.m.sqrt() * (p1 - p2) / (2.0 * var2).sqrt();
        Ok(spread + shift)
    }
}

/// `FPR_lambda = 1/2 + 1/2 erf(z)`, evaluated as `erfc(-z) / 2` so that it
/// stays positive deep in the lower tail.
pub fn fpr_closed_form(tp: &TheoryParams) -> Result<f64> {
    Ok(0.5 * erfc(-tp.z()?))
}

/// The same quantity as [`fpr_closed_form`], composed from the two normal
/// laws: the OOD CDF evaluated at the ID `lambda`-quantile.
pub fn fpr_normal_composition(tp: &TheoryParams) -> Result<f64> {
    tp.validate()?;
    let m = tp.m;
    let (mu1, sd1) = (m * tp.p1, (m * tp.p1 * (1.0 - tp.p1)).sqrt());
    let (mu2, sd2) = (m * tp.p2, (m * tp.p2 * (1.0 - tp.p2)).sqrt());
    let q = normal_quantile(tp.lambda, mu1, sd1)?;
    normal_cdf(q, mu2, sd2)
}

/// `d FPR_lambda / d M = exp(-z^2) / (2 sqrt(2 pi)) * (p1 - p2) / sqrt(M p2 (1 - p2))`.
///
/// Negative whenever `p1 < p2`, positive when `p1 > p2`.
pub fn fpr_derivative_in_m(tp: &TheoryParams) -> Result<f64> {
    let z = tp.z()?;
    let scale = (-z * z).exp() / (2.0 * (2.0 * PI).sqrt());
    Ok(scale * (tp.p1 - tp.p2) / (tp.m * tp.p2 * (1.0 - tp.p2)).sqrt())
}

/// Rule of thumb for the Gaussian approximation of `B(m, p)`:
/// `m p >= 5` and `m (1 - p) >= 5`.
pub fn binomial_gaussian_valid(m: f64, p: f64) -> bool {
    const SLACK: f64 = 1e-9;
    m * p >= 5.0 - SLACK && m * (1.0 - p) >= 5.0 - SLACK
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_rates_give_lambda() {
        for m in [10.0, 100.0, 1000.0] {
            for lambda in [0.5, 0.8, 0.95] {
                let tp = TheoryParams::new(m, 0.2, 0.2, lambda).unwrap();
                assert!((fpr_closed_form(&tp).unwrap() - lambda).abs() < 1e-12);
                assert_eq!(fpr_derivative_in_m(&tp).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn reference_point() {
        let tp = TheoryParams::new(100.0, 0.05, 0.15, 0.95).unwrap();
        let fpr = fpr_closed_form(&tp).unwrap();
        assert!((fpr - 0.036_200_03).abs() < 1e-8, "fpr = {fpr}");
        let fpr400 = fpr_closed_form(&tp.with_m(400.0)).unwrap();
        assert!(fpr400 < fpr);
        assert!(fpr_derivative_in_m(&tp).unwrap() < 0.0);
        let flipped = TheoryParams::new(100.0, 0.15, 0.05, 0.95).unwrap();
        assert!(fpr_derivative_in_m(&flipped).unwrap() > 0.0);
    }

    #[test]
    fn finite_difference_at_half_unit_step() {
        // Central differences over M +- 0.5 carry an O(h^2) truncation
        // error of about 4e-5 relative at this point.
        let tp = TheoryParams::new(100.0, 0.05, 0.15, 0.95).unwrap();
        let fd = (fpr_closed_form(&tp.with_m(100.5)).unwrap()
            - fpr_closed_form(&tp.with_m(99.5)).unwrap())
            / 1.0;
        let d = fpr_derivative_in_m(&tp).unwrap();
        assert!(((fd - d) / d).abs() < 1e-4);
    }

    #[test]
    fn finite_difference_small_step() {
        let tp = TheoryParams::new(100.0, 0.05, 0.15, 0.95).unwrap();
        let h = 1e-3;
        let fd = (fpr_closed_form(&tp.with_m(100.0 + h)).unwrap()
            - fpr_closed_form(&tp.with_m(100.0 - h)).unwrap())
            / (2.0 * h);
        let d = fpr_derivative_in_m(&tp).unwrap();
        assert!(((fd - d) / d).abs() < 1e-6);
    }

    #[test]
    fn gaussian_rule() {
        assert!(binomial_gaussian_valid(100.0, 0.05));
        assert!(!binomial_gaussian_valid(10.0, 0.05));
        assert!(binomial_gaussian_valid(10_000.0, 0.5));
        assert!(!binomial_gaussian_valid(100.0, 0.96));
    }

    #[test]
    fn invalid_params() {
        assert!(TheoryParams::new(0.5, 0.1, 0.2, 0.9).is_err());
        assert!(TheoryParams::new(10.0, 0.0, 0.2, 0.9).is_err());
        assert!(TheoryParams::new(10.0, 0.1, 1.0, 0.9).is_err());
        assert!(TheoryParams::new(10.0, 0.1, 0.2, 1.0).is_err());
    }
}
