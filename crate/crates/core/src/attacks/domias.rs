//! Density-ratio membership inference (DOMIAS) with Gaussian product-kernel
//! density estimates in the standard embedding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::tabular::{embed, Dataset, EmbeddedMatrix, ScalingParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `h_j = sigma_j * (4 / ((d + 2) n))^(1 / (d + 4))`
    #[default]
    Silverman,
    /// `h_j = sigma_j * n^(-1 / (d + 4))`
    Scott,
}

impl BandwidthRule {
    fn factor(self, n: usize, d: usize) -> f64 {
        let (n, d) = (n as f64, d as f64);
        match self {
            BandwidthRule::Silverman => (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0)),
            BandwidthRule::Scott => n.powf(-1.0 / (d + 4.0)),
        }
    }
}

/// Gaussian product-kernel density estimate.
#[derive(Clone, Debug)]
pub struct DensityModel {
    pub bandwidths: Vec<f64>,
    sample: EmbeddedMatrix,
    log_norm: f64,
}

impl DensityModel {
    pub fn fit(sample: EmbeddedMatrix, rule: BandwidthRule) -> Result<Self> {
        let n = sample.n_rows();
        let d = sample.n_dims();
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, have: n });
        }
        let factor = rule.factor(n, d);
        let bandwidths: Vec<f64> = column_std(&sample).into_iter().map(|s| s * factor).collect();
        if let Some(j) = bandwidths.iter().position(|&h| !(h > 0.0)) {
            return Err(Error::param(format!("zero bandwidth in dimension {j}")));
        }
        let log_norm = -(n as f64).ln()
            - bandwidths
                .iter()
                .map(|h| (h * (2.0 * std::f64::consts::PI).sqrt()).ln())
                .sum::<f64>();
        Ok(DensityModel {
            bandwidths,
            sample,
            log_norm,
        })
    }

    pub fn n_dims(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let exps: Vec<f64> = self
            .sample
            .rows()
            .map(|s| {
                -0.5 * s
                    .iter()
                    .zip(x)
                    .zip(&self.bandwidths)
                    .map(|((a, b), h)| ((a - b) / h).powi(2))
                    .sum::<f64>()
            })
            .collect();
        let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + exps.iter().map(|e| (e - max).exp()).sum::<f64>().ln() + self.log_norm
    }

    pub fn log_densities(&self, x: &EmbeddedMatrix) -> Vec<f64> {
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| self.log_density(x.row(i)))
            .collect()
    }
}

fn column_std(m: &EmbeddedMatrix) -> Vec<f64> {
    (0..m.n_dims())
        .map(|j| stats::std_dev(&m.rows().map(|r| r[j]).collect::<Vec<_>>()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomiasResult {
    /// `2 * AUC - 1`, in `[-1, 1]`.
    pub score: f64,
    pub auc: f64,
    pub member_scores: Vec<f64>,
    pub nonmember_scores: Vec<f64>,
    /// Embedding dimensions dropped for zero variance.
    pub dropped_dims: Vec<usize>,
}

/// Scores every member and nonmember by `log p_synth - log p_reference` and
/// reports the normalized ROC AUC with members as positives.
pub fn domias_mia(
    synth: &Dataset,
    reference: &Dataset,
    members: &Dataset,
    nonmembers: &Dataset,
    rule: BandwidthRule,
) -> Result<DomiasResult> {
    for other in [synth, members, nonmembers] {
        reference.schema().ensure_compatible(other.schema())?;
    }
    if members.is_empty() || nonmembers.is_empty() {
        return Err(Error::param("DOMIAS needs members and nonmembers"));
    }
    if members.n_rows() != nonmembers.n_rows() {
        log::warn!(
            "DOMIAS: {} members vs {} nonmembers",
            members.n_rows(),
            nonmembers.n_rows()
        );
    }
    let params = ScalingParams::fit(reference);
    let s = embed(synth, Some(&params))?;
    let r = embed(reference, Some(&params))?;
    let (ss, rs) = (column_std(&s), column_std(&r));
    let (keep, dropped): (Vec<usize>, Vec<usize>) =
        (0..s.n_dims()).partition(|&j| ss[j] > 0.0 && rs[j] > 0.0);
    if !dropped.is_empty() {
        log::warn!("DOMIAS: dropping {} zero-variance dimensions", dropped.len());
    }
    let models = if keep.is_empty() {
        None
    } else {
        Some((
            DensityModel::fit(s.select_columns(&keep), rule)?,
            DensityModel::fit(r.select_columns(&keep), rule)?,
        ))
    };
    let score_of = |d: &Dataset| -> Result<Vec<f64>> {
        let Some((ps, pr)) = &models else {
            return Ok(vec![0.0; d.n_rows()]);
        };
        let x = embed(d, Some(&params))?.select_columns(&keep);
        Ok(ps
            .log_densities(&x)
            .into_iter()
            .zip(pr.log_densities(&x))
            .map(|(a, b)| a - b)
            .collect())
    };
    let member_scores = score_of(members)?;
    let nonmember_scores = score_of(nonmembers)?;
    let auc = stats::roc_auc(&member_scores, &nonmember_scores);
    Ok(DomiasResult {
        score: 2.0 * auc - 1.0,
        auc,
        member_scores,
        nonmember_scores,
        dropped_dims: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::mini_adult;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kde_matches_direct_sum() {
        let pts = EmbeddedMatrix::from_raw(4, 2, vec![0.0, 0.0, 1.0, 0.5, 0.2, 0.9, 0.7, 0.1]);
        let m = DensityModel::fit(pts.clone(), BandwidthRule::Silverman).unwrap();
        let x = [0.4, 0.3];
        let mut total = 0.0;
        for r in pts.rows() {
            let mut k = 1.0;
            for j in 0..2 {
                let h = m.bandwidths[j];
                let z = (x[j] - r[j]) / h;
                k *= (-0.5 * z * z).exp() / (h * (2.0 * std::f64::consts::PI).sqrt());
            }
            total += k / 4.0;
        }
        assert_abs_diff_eq!(m.log_density(&x), total.ln(), epsilon = 1e-12);
        // Silverman factor for n = 4, d = 2
        let sd0 = stats::std_dev(&[0.0, 1.0, 0.2, 0.7]);
        let f = (4.0f64 / (4.0 * 4.0)).powf(1.0 / 6.0);
        assert_abs_diff_eq!(m.bandwidths[0], sd0 * f, epsilon = 1e-15);
    }

    #[test]
    fn identical_models_score_zero() {
        let d = mini_adult(200, 1);
        let members = mini_adult(50, 2);
        let non = mini_adult(50, 3);
        let res = domias_mia(&d, &d, &members, &non, BandwidthRule::Silverman).unwrap();
        assert_eq!(res.auc, 0.5);
        assert_eq!(res.score, 0.0);
    }

    #[test]
    fn swapping_labels_negates_score() {
        let synth = mini_adult(150, 1);
        let reference = mini_adult(150, 2);
        let a = mini_adult(60, 3);
        let b = mini_adult(60, 4);
        let x = domias_mia(&synth, &reference, &a, &b, BandwidthRule::Silverman).unwrap();
        let y = domias_mia(&synth, &reference, &b, &a, BandwidthRule::Silverman).unwrap();
        assert_abs_diff_eq!(x.score, -y.score, epsilon = 1e-12);
    }

    #[test]
    fn leaked_members_are_detected() {
        let members = mini_adult(150, 3);
        let non = mini_adult(150, 4);
        let reference = mini_adult(300, 2);
        let res = domias_mia(&members, &reference, &members, &non, BandwidthRule::Silverman).unwrap();
        assert!(res.score > 0.3, "{}", res.score);
    }

    #[test]
    fn constant_column_is_dropped() {
        let d = mini_adult(100, 1);
        let rows: Vec<_> = d
            .rows()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[5] = crate::tabular::Value::Num(40.0);
                r
            })
            .collect();
        let flat = d.with_rows(rows).unwrap();
        let res = domias_mia(&flat, &d, &d.subset(&[0, 1, 2]), &d.subset(&[3, 4, 5]), BandwidthRule::Scott).unwrap();
        assert!(!res.dropped_dims.is_empty());
        assert!(res.score.is_finite());
    }
}
