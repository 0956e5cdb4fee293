use serde::{Deserialize, Serialize};

use super::metrics::check_lengths;
use crate::error::{Error, Result};
use crate::labeling::SentimentLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    pub chi2: f64,
    pub p_value: f64,
    pub significant: bool,
    /// No discordant pairs.
    pub degenerate: bool,
}

/// Continuity-corrected statistic `max(|b - c| - 1, 0)^2 / (b + c)`.
pub fn mcnemar_from_counts(b: u64, c: u64) -> McNemarResult {
    if b + c == 0 {
        return McNemarResult {
            b,
            c,
            chi2: 0.0,
            p_value: 1.0,
            significant: false,
            degenerate: true,
        };
    }
    let diff = (b.abs_diff(c) as f64 - 1.0).max(0.0);
    let chi2 = diff * diff / (b + c) as f64;
    let p_value = chi2_sf_1df(chi2).expect("non-negative statistic");
    McNemarResult {
        b,
        c,
        chi2,
        p_value,
        significant: p_value < 0.05,
        degenerate: false,
    }
}

pub fn mcnemar(y_true: &[SentimentLabel], pred_a: &[SentimentLabel], pred_b: &[SentimentLabel]) -> Result<McNemarResult> {
    check_lengths(y_true, pred_a)?;
    check_lengths(y_true, pred_b)?;
    let mut b = 0;
    let mut c = 0;
    for ((t, pa), pb) in y_true.iter().zip(pred_a).zip(pred_b) {
        match (pa == t, pb == t) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c))
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi2_sf_1df(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::contract(format!("chi-square statistic must be >= 0, got {x}")));
    }
    Ok(erfc((x / 2.0).sqrt()))
}

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Complementary error function. For `|x| < 2` uses the series
/// `erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!` (all terms
/// positive); beyond that the continued fraction
/// `erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`
/// evaluated with the modified Lentz method. Absolute error is below 1e-15.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term > sum * 1e-17 {
            n += 1.0;
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
        }
        return 1.0 - FRAC_2_SQRT_PI * (-x2).exp() * sum;
    }
    if x > 27.3 {
        return 0.0;
    }
    let tiny = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
}
