//! Association between a per-athlete measure and a binary label.

use serde::{Deserialize, Serialize};

use super::special::{normal_two_sided, student_t_two_sided};
use super::{InferError, Result};

const MIN_SAMPLES: usize = 4;
const MAX_IRLS: usize = 100;
const LL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

fn check_labels(n: usize, labels: &[bool], need: usize) -> Result<()> {
    if n != labels.len() {
        return Err(InferError::LengthMismatch(n, labels.len()));
    }
    let ones = labels.iter().filter(|&&l| l).count();
    if n < need || ones == 0 || ones == n {
        return Err(InferError::DegenerateLabels { n, ones, need });
    }
    Ok(())
}

/// Pearson correlation of `values` with the 0/1 labels, with a two-sided
/// t test on `n − 2` degrees of freedom.
pub fn point_biserial(values: &[f64], labels: &[bool]) -> Result<Correlation> {
    check_labels(values.len(), labels, MIN_SAMPLES)?;
    let n = values.len() as f64;
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let mx = values.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in values.iter().zip(&y) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(InferError::ZeroVariance);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let dof = n - 2.0;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        student_t_two_sided(r * (dof / (1.0 - r * r)).sqrt(), dof)
    };
    Ok(Correlation {
        r,
        p_value,
        n: values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub intercept: f64,
    pub slope: f64,
    pub se_intercept: f64,
    pub se_slope: f64,
    /// Wald test of a zero slope.
    pub p_slope: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn log_likelihood(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&x, &y)| {
            let eta = a + b * x;
            // ln(1 + e^η) without overflow.
            let softplus = eta.max(0.0) + (-eta.abs()).exp().ln_1p();
            y * eta - softplus
        })
        .sum()
}

/// Fisher information `XᵀWX` as (s00, s01, s11).
fn information(x: &[f64], a: f64, b: f64) -> (f64, f64, f64) {
    x.iter().fold((0.0, 0.0, 0.0), |(s0, s1, s2), &x| {
        let p = sigmoid(a + b * x);
        let w = p * (1.0 - p);
        (s0 + w, s1 + w * x, s2 + w * x * x)
    })
}

/// Maximum-likelihood fit of `P(label) = 1/(1 + exp(−(a + b·x)))` by
/// iteratively reweighted least squares.
pub fn logistic_fit(values: &[f64], labels: &[bool]) -> Result<LogisticFit> {
    check_labels(values.len(), labels, 2)?;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo == hi {
        return Err(InferError::ZeroVariance);
    }
    let range = |want: bool| {
        values
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == want)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| {
                (lo.min(v), hi.max(v))
            })
    };
    let (lo0, hi0) = range(false);
    let (lo1, hi1) = range(true);
    // Complete or quasi-complete separation leaves the MLE at infinity.
    if hi0 <= lo1 || hi1 <= lo0 {
        return Err(InferError::Separation);
    }

    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (mut a, mut b) = ((mean / (1.0 - mean)).ln(), 0.0);
    let mut ll = log_likelihood(values, &y, a, b);
    for iteration in 1..=MAX_IRLS {
        // Newton step: (XᵀWX)⁻¹ Xᵀ(y − p).
        let (s00, s01, s11) = information(values, a, b);
        let (g0, g1) = values
            .iter()
            .zip(&y)
            .fold((0.0, 0.0), |(g0, g1), (&x, &y)| {
                let r = y - sigmoid(a + b * x);
                (g0 + r, g1 + r * x)
            });
        let det = s00 * s11 - s01 * s01;
        a += (s11 * g0 - s01 * g1) / det;
        b += (s00 * g1 - s01 * g0) / det;
        let next = log_likelihood(values, &y, a, b);
        let change = (next - ll).abs();
        ll = next;
        if change < LL_TOL {
            let (s00, s01, s11) = information(values, a, b);
            let det = s00 * s11 - s01 * s01;
            let se_intercept = (s11 / det).sqrt();
            let se_slope = (s00 / det).sqrt();
            return Ok(LogisticFit {
                intercept: a,
                slope: b,
                se_intercept,
                se_slope,
                p_slope: normal_two_sided(b / se_slope),
                log_likelihood: ll,
                iterations: iteration,
            });
        }
    }
    Err(InferError::NoConvergence(MAX_IRLS))
}
