use rayon::prelude::*;

use super::embed::{euclidean, EmbeddedMatrix};
use crate::error::{Error, Result};

/// `k` nearest reference rows per query row, distances non-decreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborResult {
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

impl NeighborResult {
    pub fn k(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }

    /// Distance to the single nearest neighbor of every query row.
    pub fn nearest_distances(&self) -> Vec<f64> {
        self.distances.iter().map(|d| d[0]).collect()
    }

    /// Mean distance over each query's neighborhood.
    pub fn mean_distances(&self) -> Vec<f64> {
        self.distances
            .iter()
            .map(|d| d.iter().sum::<f64>() / d.len() as f64)
            .collect()
    }
}

/// Exact brute-force k-NN under an arbitrary dissimilarity.
///
/// Ties are broken by lower reference index. With `exclude_self`, reference
/// index `i` is skipped for query `i`.
pub fn knn_by<F>(n_query: usize, n_reference: usize, k: usize, exclude_self: bool, dist: F) -> Result<NeighborResult>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let available = n_reference.saturating_sub(exclude_self as usize);
    if k == 0 || k > available {
        return Err(Error::KOutOfRange { k, max: available });
    }
    let per_query: Vec<(Vec<usize>, Vec<f64>)> = (0..n_query)
        .into_par_iter()
        .map(|i| {
            let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
            for j in 0..n_reference {
                if exclude_self && i == j {
                    continue;
                }
                let d = dist(i, j);
                if best.len() == k && d >= best[k - 1].0 {
                    continue;
                }
                // insert after all entries with distance <= d (j is larger
                // than every stored index, so equal distances keep index order)
                let pos = best.partition_point(|&(bd, _)| bd <= d);
                best.insert(pos, (d, j));
                best.truncate(k);
            }
            best.into_iter().map(|(d, j)| (j, d)).unzip()
        })
        .collect();
    let (indices, distances) = per_query.into_iter().unzip();
    Ok(NeighborResult { indices, distances })
}

/// Exact k-NN under Euclidean distance in the embedded space.
pub fn nearest_neighbors(
    query: &EmbeddedMatrix,
    reference: &EmbeddedMatrix,
    k: usize,
    exclude_self: bool,
) -> Result<NeighborResult> {
    if query.n_dims() != reference.n_dims() {
        return Err(Error::SchemaMismatch(format!(
            "query has {} dims, reference {}",
            query.n_dims(),
            reference.n_dims()
        )));
    }
    knn_by(query.n_rows(), reference.n_rows(), k, exclude_self, |i, j| {
        euclidean(query.row(i), reference.row(j))
    })
}
