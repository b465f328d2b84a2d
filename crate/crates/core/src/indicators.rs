//! Statistical privacy indicators: identical match share, distance to
//! closest record and its k-nearest-neighbor generalization.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats;
use crate::tabular::{embed, nearest_neighbors, record_key, Dataset, EmbeddedMatrix, ScalingParams};
use rand::seq::SliceRandom;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    /// Percentile of the real-to-real distribution used as threshold.
    pub alpha_percent: f64,
    pub k: usize,
    /// Seed of the D1/D2 partition of the real data.
    pub seed: u64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            alpha_percent: 2.0,
            k: 1,
            seed: 0,
        }
    }
}

impl IndicatorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha_percent > 0.0 && self.alpha_percent < 100.0) {
            return Err(Error::param(format!(
                "alpha_percent {} not in (0, 100)",
                self.alpha_percent
            )));
        }
        if self.k == 0 {
            return Err(Error::KOutOfRange { k: 0, max: 0 });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorScore {
    pub value: f64,
    pub raw_numerator: usize,
    pub raw_denominator: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

/// Identical match share: fraction of synthetic rows (with multiplicity)
/// that exactly equal some real row.
pub fn ims(real: &Dataset, synth: &Dataset) -> Result<IndicatorScore> {
    let matches = ims_matches(real, synth)?;
    let hits = matches.iter().filter(|&&m| m).count();
    Ok(IndicatorScore {
        value: hits as f64 / synth.n_rows() as f64,
        raw_numerator: hits,
        raw_denominator: synth.n_rows() as f64,
        threshold: None,
    })
}

/// Per synthetic row: does it exactly match a real row?
pub fn ims_matches(real: &Dataset, synth: &Dataset) -> Result<Vec<bool>> {
    real.schema().ensure_compatible(synth.schema())?;
    if synth.is_empty() {
        return Err(Error::param("IMS of an empty synthetic dataset"));
    }
    let keys: HashSet<Vec<u64>> = real.rows().iter().map(|r| record_key(r)).collect();
    Ok(synth
        .rows()
        .iter()
        .map(|r| keys.contains(&record_key(r)))
        .collect())
}

fn embed_pair(synth: &Dataset, real: &Dataset) -> Result<(EmbeddedMatrix, EmbeddedMatrix)> {
    real.schema().ensure_compatible(synth.schema())?;
    let params = ScalingParams::fit(real);
    Ok((embed(synth, Some(&params))?, embed(real, Some(&params))?))
}

/// Synthetic-to-real distance of every synthetic row: Euclidean distance in
/// the standard embedding (fitted on `real`) to the nearest real row.
pub fn srd_distribution(synth: &Dataset, real: &Dataset) -> Result<Vec<f64>> {
    srd_knn(synth, real, 1)
}

/// Mean distance from every synthetic row to its `k` nearest real rows.
pub fn srd_knn(synth: &Dataset, real: &Dataset, k: usize) -> Result<Vec<f64>> {
    if real.is_empty() {
        return Err(Error::TooFewRows { needed: 1, have: 0 });
    }
    let (s, r) = embed_pair(synth, real)?;
    Ok(nearest_neighbors(&s, &r, k, false)?.mean_distances())
}

/// Real-to-real distances from each row of D1 to its neighbors in D2.
#[derive(Clone, Debug)]
pub struct RrdDistribution {
    pub values: Vec<f64>,
    pub d1: Vec<usize>,
    pub d2: Vec<usize>,
    sorted: Vec<f64>,
}

impl RrdDistribution {
    /// The `alpha`-th percentile, linearly interpolated.
    pub fn threshold(&self, alpha_percent: f64) -> f64 {
        stats::percentile_sorted(&self.sorted, alpha_percent)
    }
}

/// Seeded equal-halves partition of `n` row indices.
pub fn halves(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::rng(seed));
    let h = n / 2;
    (order[..h].to_vec(), order[h..2 * h].to_vec())
}

pub fn rrd_distribution(real: &Dataset, seed: u64) -> Result<RrdDistribution> {
    rrd_knn(real, seed, 1)
}

pub fn rrd_knn(real: &Dataset, seed: u64, k: usize) -> Result<RrdDistribution> {
    if real.n_rows() < 4 {
        return Err(Error::TooFewRows {
            needed: 4,
            have: real.n_rows(),
        });
    }
    let (d1, d2) = halves(real.n_rows(), seed);
    let params = ScalingParams::fit(real);
    let m1 = embed(&real.subset(&d1), Some(&params))?;
    let m2 = embed(&real.subset(&d2), Some(&params))?;
    let values = nearest_neighbors(&m1, &m2, k, false)?.mean_distances();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(RrdDistribution {
        values,
        d1,
        d2,
        sorted,
    })
}

/// Precomputed pieces of a DCR / k-NN indicator, reusable for resampling
/// the synthetic rows.
#[derive(Clone, Debug)]
pub struct DcrComponents {
    pub srd: Vec<f64>,
    pub threshold: f64,
    pub d1_len: usize,
    pub alpha_percent: f64,
}

impl DcrComponents {
    pub fn below(&self, i: usize) -> bool {
        self.srd[i] < self.threshold
    }

    /// Indicator value over all synthetic rows.
    pub fn score(&self) -> IndicatorScore {
        let count = (0..self.srd.len()).filter(|&i| self.below(i)).count();
        self.finish(count, self.srd.len())
    }

    /// Indicator value over a resample of synthetic row indices.
    pub fn score_subset(&self, rows: &[usize]) -> IndicatorScore {
        let count = rows.iter().filter(|&&i| self.below(i)).count();
        self.finish(count, rows.len())
    }

    fn finish(&self, count: usize, n_synth: usize) -> IndicatorScore {
        IndicatorScore {
            value: normalized_dcr(count, n_synth, self.alpha_percent),
            raw_numerator: count,
            raw_denominator: self.alpha_percent / 100.0 * self.d1_len as f64,
            threshold: Some(self.threshold),
        }
    }
}

/// Rescales the fraction of synthetic rows below the threshold so the
/// matched-distribution rate `alpha/100` maps to 0 and "all rows below" to 1.
pub fn normalized_dcr(count_below: usize, n_synth: usize, alpha_percent: f64) -> f64 {
    let rate = count_below as f64 / n_synth as f64;
    let inv = 100.0 / alpha_percent;
    (rate * inv - 1.0) / (inv - 1.0)
}

pub fn dcr_components(synth: &Dataset, real: &Dataset, cfg: &IndicatorConfig) -> Result<DcrComponents> {
    cfg.validate()?;
    if synth.is_empty() {
        return Err(Error::param("DCR of an empty synthetic dataset"));
    }
    let half = real.n_rows() / 2;
    if cfg.k > half.min(real.n_rows()) {
        return Err(Error::KOutOfRange { k: cfg.k, max: half });
    }
    let rrd = rrd_knn(real, cfg.seed, cfg.k)?;
    let srd = srd_knn(synth, real, cfg.k)?;
    Ok(DcrComponents {
        srd,
        threshold: rrd.threshold(cfg.alpha_percent),
        d1_len: rrd.d1.len(),
        alpha_percent: cfg.alpha_percent,
    })
}

/// Distance to closest record at the `alpha`-th RRD percentile (k = 1).
pub fn dcr(synth: &Dataset, real: &Dataset, cfg: &IndicatorConfig) -> Result<IndicatorScore> {
    let cfg = IndicatorConfig { k: 1, ..cfg.clone() };
    Ok(dcr_components(synth, real, &cfg)?.score())
}

/// DCR with every SRD/RRD replaced by the mean distance over the `cfg.k`
/// nearest neighbors. `k = 1` coincides with [`dcr`].
pub fn knn_indicator(synth: &Dataset, real: &Dataset, cfg: &IndicatorConfig) -> Result<IndicatorScore> {
    Ok(dcr_components(synth, real, cfg)?.score())
}
