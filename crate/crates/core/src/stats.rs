//! Small statistics helpers shared by the indicators, attacks and harness.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Guess-effectiveness estimate: success rate `r` with Wilson half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub rate: f64,
    pub half_width: f64,
    pub confidence: f64,
    pub n: usize,
    pub successes: usize,
}

impl RiskEstimate {
    pub fn low(&self) -> f64 {
        (self.rate - self.half_width).max(0.0)
    }

    pub fn high(&self) -> f64 {
        (self.rate + self.half_width).min(1.0)
    }

    /// Raw success fraction.
    pub fn fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.successes as f64 / self.n as f64
        }
    }
}

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Two-sided standard normal quantile for a confidence level.
pub fn z_score(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval. `rate` is the interval center and `half_width`
/// half its length.
pub fn wilson_interval(successes: usize, n: usize, confidence: f64) -> Result<RiskEstimate> {
    if n == 0 {
        return Err(Error::param("wilson interval needs n >= 1"));
    }
    if successes > n {
        return Err(Error::param(format!("successes {successes} > n {n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param(format!("confidence {confidence} not in (0, 1)")));
    }
    let z = z_score(confidence);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    Ok(RiskEstimate {
        rate: center,
        half_width: half,
        confidence,
        n,
        successes,
    })
}

/// Percentile `q` in `[0, 100]` with linear interpolation between order
/// statistics (position `q/100 * (n - 1)`).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (q / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    // shifted by the first value so constant input comes back exactly
    let base = if values[0].is_finite() { values[0] } else { 0.0 };
    base + values.iter().map(|v| v - base).sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Population standard deviation.
pub fn pop_std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Pearson correlation; `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Area under the ROC curve with `positives` as the positive class,
/// ties counted as one half (average-rank Mann-Whitney form).
pub fn roc_auc(positives: &[f64], negatives: &[f64]) -> f64 {
    let np = positives.len();
    let nn = negatives.len();
    assert!(np > 0 && nn > 0, "AUC needs both classes");
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let avg_rank = (i + j + 2) as f64 / 2.0;
        rank_sum += avg_rank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    (rank_sum - (np * (np + 1)) as f64 / 2.0) / (np * nn) as f64
}
