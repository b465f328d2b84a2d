//! Local outlier factor on the standard embedding.

use super::dataset::Dataset;
use super::embed::{embed, EmbeddedMatrix};
use super::neighbors::nearest_neighbors;
use crate::error::{Error, Result};

pub const DEFAULT_K_LOF: usize = 20;

// Guards the reachability density against exact duplicates.
const DENSITY_EPS: f64 = 1e-10;

/// LOF score per row (reachability-distance formulation). Inliers score
/// about 1, outliers well above.
pub fn lof_scores(points: &EmbeddedMatrix, k: usize) -> Result<Vec<f64>> {
    let n = points.n_rows();
    if k == 0 || k >= n {
        return Err(Error::param(format!("k_lof = {k} must be in [1, n) with n = {n}")));
    }
    let nn = nearest_neighbors(points, points, k, true)?;
    let k_distance: Vec<f64> = nn.distances.iter().map(|d| d[k - 1]).collect();
    let lrd: Vec<f64> = (0..n)
        .map(|p| {
            let reach: f64 = nn.indices[p]
                .iter()
                .zip(&nn.distances[p])
                .map(|(&o, &d)| d.max(k_distance[o]))
                .sum();
            1.0 / (reach / k as f64 + DENSITY_EPS)
        })
        .collect();
    Ok((0..n)
        .map(|p| {
            let neighbor_lrd: f64 = nn.indices[p].iter().map(|&o| lrd[o]).sum();
            neighbor_lrd / k as f64 / lrd[p]
        })
        .collect())
}

/// Indices of the `ceil(fraction * n)` rows with the highest LOF, ties going
/// to the lower row index. Returned in ascending index order.
pub fn lof_outlier_indices(data: &Dataset, fraction: f64, k_lof: usize) -> Result<Vec<usize>> {
    if !(0.0..=0.5).contains(&fraction) {
        return Err(Error::param(format!("outlier fraction {fraction} not in [0, 0.5]")));
    }
    let n = data.n_rows();
    if k_lof == 0 || k_lof >= n {
        return Err(Error::param(format!("k_lof = {k_lof} must be in [1, n) with n = {n}")));
    }
    let n_remove = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if n_remove == 0 {
        return Ok(Vec::new());
    }
    let scores = lof_scores(&embed(data, None)?, k_lof)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out = order[..n_remove].to_vec();
    out.sort_unstable();
    Ok(out)
}

/// Splits `data` into `(kept, removed)` by LOF, preserving row order.
pub fn remove_outliers_lof(data: &Dataset, fraction: f64, k_lof: usize) -> Result<(Dataset, Dataset)> {
    let removed = lof_outlier_indices(data, fraction, k_lof)?;
    let kept: Vec<usize> = (0..data.n_rows())
        .filter(|i| removed.binary_search(i).is_err())
        .collect();
    Ok((data.subset(&kept), data.subset(&removed)))
}
