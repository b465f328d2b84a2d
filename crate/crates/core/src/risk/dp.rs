//! Independent Laplace-noised marginals, an `epsilon`-DP synthesizer under
//! remove-one adjacency.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::tabular::{Dataset, Value};

pub const DEFAULT_BINS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoisyMarginal {
    Categorical { probs: Vec<f64> },
    /// Equal-width bins over `[lo, hi]`.
    Numeric { lo: f64, hi: f64, probs: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct DpMarginalSynth {
    template: Dataset,
    pub epsilon: f64,
    pub marginals: Vec<NoisyMarginal>,
}

/// One Laplace(0, scale) draw.
pub fn laplace(rng: &mut Rng, scale: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    if rng.random::<bool>() {
        scale * e
    } else {
        -scale * e
    }
}

/// Adds Laplace noise of the given scale to every cell, clamps negative cells
/// to zero and normalizes. An all-zero result becomes uniform.
pub fn noisy_histogram(counts: &[f64], scale: f64, rng: &mut Rng) -> Vec<f64> {
    let noisy: Vec<f64> = counts.iter().map(|&c| (c + laplace(rng, scale)).max(0.0)).collect();
    let total: f64 = noisy.iter().sum();
    if total > 0.0 {
        noisy.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / counts.len() as f64; counts.len()]
    }
}

/// Bin index of `x` among `bins` equal-width bins over `[lo, hi]`.
pub fn bin_of(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if !(hi > lo) {
        return 0;
    }
    (((x - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Fits the noisy marginals. Each of the `m` histograms receives budget
/// `epsilon / m` through Laplace noise of scale `2 m / epsilon`.
/// `epsilon == 0` releases pure noise: the counts are ignored and every
/// histogram is built from unit-scale Laplace draws alone.
pub fn fit_dp_marginal(train: &Dataset, epsilon: f64, bins: usize, seed: u64) -> Result<DpMarginalSynth> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::param(format!("epsilon {epsilon} must be finite and >= 0")));
    }
    if bins == 0 {
        return Err(Error::param("need at least one bin"));
    }
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    let m = train.n_attributes() as f64;
    let pure_noise = epsilon == 0.0;
    if pure_noise {
        log::info!("epsilon = 0: releasing pure-noise marginals");
    }
    let scale = if pure_noise { 1.0 } else { 2.0 * m / epsilon };
    let mut rng = rng::rng(seed);
    let marginals = (0..train.n_attributes())
        .map(|a| {
            let (counts, range) = match train.numeric_range(a) {
                Some((lo, hi)) => {
                    let mut c = vec![0.0; bins];
                    for x in train.numeric_column(a) {
                        c[bin_of(x, lo, hi, bins)] += 1.0;
                    }
                    (c, Some((lo, hi)))
                }
                None => (train.category_counts(a).iter().map(|&c| c as f64).collect(), None),
            };
            let counts = if pure_noise { vec![0.0; counts.len()] } else { counts };
            let probs = noisy_histogram(&counts, scale, &mut rng);
            match range {
                Some((lo, hi)) => NoisyMarginal::Numeric { lo, hi, probs },
                None => NoisyMarginal::Categorical { probs },
            }
        })
        .collect();
    Ok(DpMarginalSynth {
        template: train.with_rows(vec![])?,
        epsilon,
        marginals,
    })
}

fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

impl DpMarginalSynth {
    /// Draws every attribute independently; numeric values are uniform
    /// within their bin.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = rng::rng(seed);
        let rows = (0..n)
            .map(|_| {
                self.marginals
                    .iter()
                    .map(|m| match m {
                        NoisyMarginal::Categorical { probs } => Value::Cat(draw(probs, rng.random()) as u32),
                        NoisyMarginal::Numeric { lo, hi, probs } => {
                            let b = draw(probs, rng.random());
                            let width = (hi - lo) / probs.len() as f64;
                            Value::Num(lo + width * (b as f64 + rng.random::<f64>()))
                        }
                    })
                    .collect()
            })
            .collect();
        self.template.with_rows(rows).expect("sampled rows follow the training schema")
    }
}
