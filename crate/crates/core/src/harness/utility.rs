use std::collections::HashMap;

use rand::seq::SliceRandom;

use crate::attacks::{LearnerSpec, Tree};
use crate::error::{Error, Result};
use crate::rng;
use crate::tabular::{embed, Dataset, ScalingParams, Value};

pub const UTILITY_TRAIN_SHARE: f64 = 0.7;

/// Accuracy of a tree trained to tell real rows (label 0) from synthetic
/// rows (label 1). Both classes are subsampled to the same size. Rows go to
/// the training side (about 70%) or the test side by a seeded hash of the
/// record and its occurrence number within its class, so the j-th copy of a
/// record lands on the same side in both classes. Values near 0.5 mean
/// indistinguishable.
pub fn mle_utility(real: &Dataset, synth: &Dataset, learner: &LearnerSpec, seed: u64) -> Result<f64> {
    if real.is_empty() || synth.is_empty() {
        return Err(Error::param("utility needs non-empty real and synthetic data"));
    }
    real.schema().ensure_compatible(synth.schema())?;
    let n = real.n_rows().min(synth.n_rows());
    let mut rng = rng::rng(seed);
    let mut pick = |d: &Dataset| {
        let mut idx: Vec<usize> = (0..d.n_rows()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n);
        d.subset(&idx)
    };
    let (r, s) = (pick(real), pick(synth));
    let both = r.concat(&s)?;
    let params = ScalingParams::fit(&both);
    let xr = embed(&r, Some(&params))?;
    let xs = embed(&s, Some(&params))?;

    let group_seed = rng::derive_seed(seed, &[rng::tag("utility-split")]);
    let (mut xtr, mut ytr, mut xte, mut yte) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (label, data, x) in [(0u32, &r, &xr), (1u32, &s, &xs)] {
        let mut seen: HashMap<Vec<u64>, u64> = HashMap::new();
        for i in 0..data.n_rows() {
            let key = record_key(data.row(i));
            let occurrence = seen.entry(key.clone()).or_insert(0);
            let side = on_train_side(&key, *occurrence, group_seed);
            *occurrence += 1;
            if side {
                xtr.extend_from_slice(x.row(i));
                ytr.push(label);
            } else {
                xte.extend_from_slice(x.row(i));
                yte.push(label);
            }
        }
    }
    let has_both = |y: &[u32]| y.contains(&0) && y.contains(&1);
    if !has_both(&ytr) || !has_both(&yte) {
        return Err(Error::TooFewRows { needed: 4, have: n });
    }
    let d = xr.n_dims();
    let train = crate::tabular::EmbeddedMatrix::from_raw(ytr.len(), d, xtr);
    let test = crate::tabular::EmbeddedMatrix::from_raw(yte.len(), d, xte);
    let tree = Tree::fit_classifier(&train, &ytr, learner)?;
    let pred = tree.predict_class(&test);
    let correct = pred.iter().zip(&yte).filter(|(p, y)| p == y).count();
    Ok(correct as f64 / yte.len() as f64)
}

fn record_key(record: &[Value]) -> Vec<u64> {
    record
        .iter()
        .map(|v| match *v {
            Value::Num(x) => x.to_bits(),
            Value::Cat(c) => u64::from(c) | 1 << 63,
        })
        .collect()
}

fn on_train_side(key: &[u64], occurrence: u64, seed: u64) -> bool {
    let h = rng::derive_seed(rng::derive_seed(seed, key), &[occurrence]);
    ((h >> 11) as f64 / (1u64 << 53) as f64) < UTILITY_TRAIN_SHARE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::mini_adult;

    #[test]
    fn separable_junk_scores_high() {
        let real = mini_adult(400, 1);
        let junk: Vec<_> = real
            .rows()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[0] = Value::Num(500.0);
                r
            })
            .collect();
        let junk = real.with_rows(junk).unwrap();
        let u = mle_utility(&real, &junk, &LearnerSpec::default(), 2).unwrap();
        assert!(u > 0.99, "{u}");
    }

    #[test]
    fn copy_is_near_chance() {
        let real = mini_adult(1000, 3);
        let u = mle_utility(&real, &real, &LearnerSpec::default(), 4).unwrap();
        assert_eq!(u, 0.5);
    }

    #[test]
    fn partial_copy_is_not_below_chance() {
        let real = mini_adult(1000, 3);
        let half = real.subset(&(0..500).collect::<Vec<_>>()).concat(&mini_adult(500, 9)).unwrap();
        let u = mle_utility(&real, &half, &LearnerSpec::default(), 4).unwrap();
        assert!((u - 0.5).abs() < 0.06, "{u}");
    }

    #[test]
    fn rejects_empty() {
        let real = mini_adult(10, 1);
        let empty = real.with_rows(vec![]).unwrap();
        assert!(mle_utility(&real, &empty, &LearnerSpec::default(), 0).is_err());
    }
}
