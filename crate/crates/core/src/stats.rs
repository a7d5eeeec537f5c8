//! Rank correlation and descriptive statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// 1-based ranks with ties given the mean of the ranks they span.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank mean((i+1)..=(j+1))
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub r_s: f64,
    /// Two-sided, from the t approximation with n - 2 degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    pub alpha: f64,
    pub significant: bool,
}

/// Spearman's rank correlation: Pearson's r over midranks.
pub fn spearman_correlation(x: &[f64], y: &[f64], alpha: f64) -> Result<SpearmanResult> {
    if x.len() != y.len() {
        return Err(Error::Stats(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Stats(format!("need at least 3 pairs, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Stats("non-finite value in input".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Stats(format!("alpha {alpha} outside (0, 1)")));
    }
    let rx = midranks(x);
    let ry = midranks(y);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Stats(
            "correlation undefined: one input is constant".into(),
        ));
    }
    let r_s = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p_value = if r_s.abs() == 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = r_s * (df / (1.0 - r_s * r_s)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Stats(e.to_string()))?;
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(SpearmanResult {
        r_s,
        p_value,
        n,
        alpha,
        significant: p_value < alpha,
    })
}

/// Mean, sample variance and standard deviation (n - 1 denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub n: usize,
    pub mean: f64,
    /// `None` below two observations.
    pub variance: Option<f64>,
    pub std_dev: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Single-pass (Welford) summary; `None` for empty input.
pub fn describe(values: &[f64]) -> Option<Descriptive> {
    let first = *values.first()?;
    let (mut mean, mut m2) = (0.0, 0.0);
    let (mut min, mut max) = (first, first);
    for (k, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
        min = min.min(v);
        max = max.max(v);
    }
    let n = values.len();
    let variance = (n >= 2).then(|| m2 / (n - 1) as f64);
    Some(Descriptive {
        n,
        mean,
        variance,
        std_dev: variance.map(f64::sqrt),
        min,
        max,
    })
}
