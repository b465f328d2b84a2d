use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats;
use crate::tabular::Dataset;

/// Summary of a percentile bootstrap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub stdev: f64,
    pub n_resamples: usize,
    /// Resamples on which the metric failed.
    pub n_failed: usize,
}

/// Percentile bootstrap over index resamples of `0..n`: `metric` receives
/// `n` indices drawn with replacement.
pub fn bootstrap_indices<F>(n: usize, metric: F, n_resamples: usize, confidence: f64, seed: u64) -> Result<BootstrapSummary>
where
    F: Fn(&[usize]) -> Result<f64>,
{
    if n_resamples < 2 {
        return Err(Error::param(format!("n_resamples = {n_resamples} must be >= 2")));
    }
    if n == 0 {
        return Err(Error::EmptyTable);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param(format!("confidence {confidence} not in (0, 1)")));
    }
    let mut rng = rng::rng(seed);
    let mut idx = vec![0usize; n];
    let mut values = Vec::with_capacity(n_resamples);
    let mut n_failed = 0;
    for _ in 0..n_resamples {
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        match metric(&idx) {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) | Err(_) => n_failed += 1,
        }
    }
    if n_failed > 0 {
        log::warn!("bootstrap: {n_failed} of {n_resamples} resamples failed");
    }
    if values.len() < 2 {
        return Err(Error::Other(format!(
            "bootstrap: only {} of {n_resamples} resamples succeeded",
            values.len()
        )));
    }
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0 * 100.0;
    Ok(BootstrapSummary {
        mean: stats::mean(&values),
        ci_low: stats::percentile_sorted(&values, tail),
        ci_high: stats::percentile_sorted(&values, 100.0 - tail),
        stdev: stats::std_dev(&values),
        n_resamples,
        n_failed,
    })
}

/// Resamples the rows of `base` with replacement and recomputes `metric` on
/// every resample.
pub fn bootstrap_ci<F>(metric: F, base: &Dataset, n_resamples: usize, confidence: f64, seed: u64) -> Result<BootstrapSummary>
where
    F: Fn(&Dataset) -> Result<f64>,
{
    bootstrap_indices(base.n_rows(), |idx| metric(&base.subset(idx)), n_resamples, confidence, seed)
}

/// Mean of booleans selected by `idx`.
pub(crate) fn rate_of(outcomes: &[bool], idx: &[usize]) -> f64 {
    idx.iter().filter(|&&i| outcomes[i]).count() as f64 / idx.len() as f64
}
