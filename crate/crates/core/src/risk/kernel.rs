//! Kernel-smoothing synthesizer. The bandwidth `h` interpolates between a
//! verbatim copier (`h -> 0`) and independent marginals (large `h`).

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng;
use crate::tabular::{Dataset, Value};

/// Resolution, in min-max scaled units, at which numeric values are
/// discretized for the validation likelihood.
pub const LOSS_RESOLUTION: f64 = 0.01;

/// Floor for the probability of a categorical level absent from training.
const MIN_LEVEL_PROB: f64 = 1e-12;

#[derive(Clone, Debug)]
enum Column {
    Numeric { span: f64 },
    Categorical { cdf: Vec<f64>, probs: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct KernelSynth {
    train: Dataset,
    bandwidth: f64,
    columns: Vec<Column>,
}

pub fn fit_kernel_synth(train: &Dataset, bandwidth: f64) -> Result<KernelSynth> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::param(format!("bandwidth {bandwidth} must be positive")));
    }
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    let n = train.n_rows() as f64;
    let columns = (0..train.n_attributes())
        .map(|a| match train.numeric_range(a) {
            Some((min, max)) => Column::Numeric { span: max - min },
            None => {
                let probs: Vec<f64> = train.category_counts(a).iter().map(|&c| c as f64 / n).collect();
                let cdf = probs
                    .iter()
                    .scan(0.0, |acc, p| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect();
                Column::Categorical { cdf, probs }
            }
        })
        .collect();
    Ok(KernelSynth {
        train: train.clone(),
        bandwidth,
        columns,
    })
}

impl KernelSynth {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn training_data(&self) -> &Dataset {
        &self.train
    }

    /// Same fitted sample with another bandwidth.
    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<KernelSynth> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::param(format!("bandwidth {bandwidth} must be positive")));
        }
        Ok(KernelSynth {
            bandwidth,
            ..self.clone()
        })
    }

    fn resample_prob(&self) -> f64 {
        self.bandwidth.min(1.0)
    }

    /// Draws `n` rows. Every row consumes the same random numbers whatever
    /// the bandwidth, so samples for two bandwidths under one seed differ
    /// only through `h`.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = rng::rng(seed);
        let p = self.resample_prob();
        let rows = (0..n)
            .map(|_| {
                let src = self.train.row(rng.random_range(0..self.train.n_rows()));
                self.columns
                    .iter()
                    .zip(src)
                    .map(|(col, &v)| match col {
                        Column::Numeric { span, .. } => {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            Value::Num(v.as_f64() + self.bandwidth * span * z)
                        }
                        Column::Categorical { cdf, .. } => {
                            let u: f64 = rng.random();
                            let w: f64 = rng.random();
                            if u < p {
                                let level = cdf.partition_point(|&c| c <= w).min(cdf.len() - 1);
                                Value::Cat(level as u32)
                            } else {
                                v
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        self.train.with_rows(rows).expect("sampled rows follow the training schema")
    }

    /// Log-probability of one validation row: numeric cells contribute the
    /// Gaussian mass of a width-[`LOSS_RESOLUTION`] bin in scaled space,
    /// categorical cells the keep-or-resample mixture probability.
    fn log_prob(&self, row: &[Value]) -> f64 {
        let h = self.bandwidth;
        let p = self.resample_prob();
        let terms: Vec<f64> = self
            .train
            .rows()
            .iter()
            .map(|src| {
                self.columns
                    .iter()
                    .enumerate()
                    .map(|(a, col)| match col {
                        Column::Numeric { span } => {
                            if *span > 0.0 {
                                let d = (row[a].as_f64() - src[a].as_f64()).abs() / span;
                                log_bin_mass(d, h, LOSS_RESOLUTION)
                            } else if row[a] == src[a] {
                                0.0
                            } else {
                                MIN_LEVEL_PROB.ln()
                            }
                        }
                        Column::Categorical { probs, .. } => {
                            let level = row[a].cat().expect("categorical cell") as usize;
                            let m = probs.get(level).copied().unwrap_or(0.0);
                            let keep = if row[a] == src[a] { 1.0 - p } else { 0.0 };
                            (keep + p * m).max(MIN_LEVEL_PROB).ln()
                        }
                    })
                    .sum()
            })
            .collect();
        log_sum_exp(&terms) - (terms.len() as f64).ln()
    }

    /// Mean negative log-likelihood of `val` under the discretized model.
    /// Every cell probability is at most 1, so the loss is non-negative.
    pub fn validation_loss(&self, val: &Dataset) -> Result<f64> {
        if val.is_empty() {
            return Err(Error::EmptyTable);
        }
        self.train.schema().ensure_compatible(val.schema())?;
        let total: f64 = val.rows().par_iter().map(|r| -self.log_prob(r)).sum();
        Ok(total / val.n_rows() as f64)
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln Q(x)` for the standard normal upper tail `Q`, accurate far into the
/// tail.
fn log_upper_tail(x: f64) -> f64 {
    if x < 30.0 {
        (0.5 * erfc(x / std::f64::consts::SQRT_2)).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - x.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// `ln P(|d + sigma Z| within a bin of width w centred on d)`, i.e. the log
/// mass of `N(0, sigma^2)` on `[d - w/2, d + w/2]` with `d >= 0`.
fn log_bin_mass(d: f64, sigma: f64, w: f64) -> f64 {
    let a = (d - w / 2.0) / sigma;
    let b = (d + w / 2.0) / sigma;
    if a <= 0.0 {
        // the bin straddles the mean; no cancellation problem
        let lower = 0.5 * erfc(-a / std::f64::consts::SQRT_2);
        let upper = 0.5 * erfc(b / std::f64::consts::SQRT_2);
        return (1.0 - lower.min(1.0) - upper).max(f64::MIN_POSITIVE).ln();
    }
    let (la, lb) = (log_upper_tail(a), log_upper_tail(b));
    la + (-(lb - la).exp()).ln_1p()
}
