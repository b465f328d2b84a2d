use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Pearson correlations between metric series over a risk grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub metrics: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    /// Series with zero variance; their off-diagonal entries are 0.
    pub constant: Vec<String>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.metrics.iter().position(|m| m == a)?;
        let j = self.metrics.iter().position(|m| m == b)?;
        Some(self.matrix[i][j])
    }
}

pub fn correlation_matrix(series: &BTreeMap<String, Vec<f64>>) -> Result<CorrelationMatrix> {
    let len = series.values().next().map_or(0, Vec::len);
    if series.values().any(|s| s.len() != len) {
        return Err(Error::param("correlation series differ in length"));
    }
    if len < 3 {
        return Err(Error::param(format!("correlation needs at least 3 levels, got {len}")));
    }
    let metrics: Vec<String> = series.keys().cloned().collect();
    let values: Vec<&Vec<f64>> = series.values().collect();
    let n = metrics.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        matrix[i][i] = 1.0;
        for j in i + 1..n {
            let r = stats::pearson(values[i], values[j]).unwrap_or(0.0).clamp(-1.0, 1.0);
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    let constant = metrics
        .iter()
        .zip(&values)
        .filter(|(_, v)| stats::pearson(v, v).is_none())
        .map(|(m, _)| m.clone())
        .collect();
    Ok(CorrelationMatrix {
        metrics,
        matrix,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(pairs: &[(&str, Vec<f64>)]) -> BTreeMap<String, Vec<f64>> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn self_and_negation() {
        let x = vec![0.1, 0.5, 0.2, 0.9];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let m = correlation_matrix(&series(&[("a", x.clone()), ("b", x), ("c", neg)])).unwrap();
        assert!((m.get("a", "b").unwrap() - 1.0).abs() < 1e-12);
        assert!((m.get("a", "c").unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_is_flagged() {
        let m = correlation_matrix(&series(&[("a", vec![1.0, 2.0, 3.0]), ("k", vec![4.0; 3])])).unwrap();
        assert_eq!(m.get("a", "k"), Some(0.0));
        assert_eq!(m.get("k", "k"), Some(1.0));
        assert_eq!(m.constant, vec!["k".to_string()]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(correlation_matrix(&series(&[("a", vec![1.0, 2.0, 3.0]), ("b", vec![1.0, 2.0])])).is_err());
        assert!(correlation_matrix(&series(&[("a", vec![1.0, 2.0])])).is_err());
    }

    /// Smallest eigenvalue bound via Gershgorin is too loose; check x'Mx >= 0
    /// on random directions instead.
    fn quadratic_form(m: &[Vec<f64>], x: &[f64]) -> f64 {
        m.iter()
            .zip(x)
            .map(|(row, xi)| xi * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    proptest! {
        #[test]
        fn symmetric_bounded_psd(
            data in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 2..5),
            dirs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 10),
        ) {
            let s: BTreeMap<String, Vec<f64>> =
                data.iter().enumerate().map(|(i, v)| (format!("m{i}"), v.clone())).collect();
            let m = correlation_matrix(&s).unwrap();
            let n = m.metrics.len();
            for i in 0..n {
                prop_assert_eq!(m.matrix[i][i], 1.0);
                for j in 0..n {
                    prop_assert_eq!(m.matrix[i][j], m.matrix[j][i]);
                    prop_assert!(m.matrix[i][j].abs() <= 1.0);
                }
            }
            if m.constant.is_empty() {
                for d in &dirs {
                    prop_assert!(quadratic_form(&m.matrix, &d[..n]) >= -1e-9);
                }
            }
        }
    }
}
