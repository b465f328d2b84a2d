use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::tabular::Dataset;

/// Number of training rows a leaky release of `n_train` rows contains.
pub fn leaked_count(n_train: usize, f_l: f64) -> usize {
    (f_l * n_train as f64).round() as usize
}

/// A "synthetic" release of `|train|` rows made of `round(f_l * |train|)`
/// training rows (sampled without replacement) and release rows for the
/// remainder. Release rows are sampled without replacement when there are
/// enough of them and with replacement otherwise. Row order is shuffled.
pub fn leaky_release(train: &Dataset, release: &Dataset, f_l: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&f_l) {
        return Err(Error::param(format!("leak fraction {f_l} not in [0, 1]")));
    }
    train.schema().ensure_compatible(release.schema())?;
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::EmptyTable);
    }
    let n_leak = leaked_count(n, f_l);
    let n_rest = n - n_leak;
    if n_rest > 0 && release.is_empty() {
        return Err(Error::TooFewRows { needed: 1, have: 0 });
    }
    let mut rng = rng::rng(seed);
    let mut rows = Vec::with_capacity(n);
    for i in index::sample(&mut rng, n, n_leak) {
        rows.push(train.row(i).to_vec());
    }
    if release.n_rows() >= n_rest {
        for i in index::sample(&mut rng, release.n_rows(), n_rest) {
            rows.push(release.row(i).to_vec());
        }
    } else {
        log::warn!(
            "leaky release: {} release rows for {} slots, sampling with replacement",
            release.n_rows(),
            n_rest
        );
        for _ in 0..n_rest {
            rows.push(release.row(rng.random_range(0..release.n_rows())).to_vec());
        }
    }
    rows.shuffle(&mut rng);
    train.concat(&release.with_rows(vec![])?)?.with_rows(rows)
}
