//! Error function, its inverse, and the normal CDF / quantile.

use std::f64::consts::{PI, SQRT_2};

use super::{Result, TheoryError};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Single-precision starting point (M. Giles, "Approximating the erfinv
/// function", 2010).
fn erfinv_initial(y: f64) -> f64 {
    let mut w = -((1.0 - y) * (1.0 + y)).ln();
    let p = if w < 5.0 {
        w -= 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * y
}

/// Inverse error function on the open interval `(-1, 1)`.
///
/// A polynomial starting guess is polished with two Halley steps against
/// [`erf`]. For `|y| > 0.5` the residual is taken on the `erfc` side so
/// that values close to +-1 keep their precision.
pub fn erfinv(y: f64) -> Result<f64> {
    if !(y > -1.0 && y < 1.0) {
        return Err(TheoryError::Domain(format!("erfinv({y}) requires |y| < 1")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let sign = y.signum();
    let a = y.abs();
    let mut x = erfinv_initial(a);
    for _ in 0..2 {
        let resid = if a > 0.5 {
            (1.0 - a) - erfc(x)
        } else {
            erf(x) - a
        };
        let deriv = std::f64::consts::FRAC_2_SQRT_PI * (-x * x).exp();
        if deriv == 0.0 {
            break;
        }
        x -= resid / (deriv + x * resid);
    }
    Ok(sign * x)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(TheoryError::Domain(format!(
            "standard deviation must be positive, got {sigma}"
        )));
    }
    Ok(())
}

pub fn normal_cdf(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(0.5 * erfc(-(x - mu) / (sigma * SQRT_2)))
}

pub fn normal_quantile(q: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(TheoryError::Domain(format!(
            "normal quantile requires 0 < q < 1, got {q}"
        )));
    }
    Ok(mu + sigma * SQRT_2 * erfinv(2.0 * q - 1.0)?)
}

pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}
