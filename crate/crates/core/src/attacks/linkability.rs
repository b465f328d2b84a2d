//! Linkability: can two disjoint views of the same record be joined through
//! their nearest synthetic neighbors?

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{wilson_interval, RiskEstimate, DEFAULT_CONFIDENCE};
use crate::tabular::{gower_distance_on, knn_by, Dataset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkabilityResult {
    pub train: RiskEstimate,
    pub control: RiskEstimate,
    #[serde(skip)]
    pub train_outcomes: Vec<bool>,
    #[serde(skip)]
    pub control_outcomes: Vec<bool>,
}

/// First half of the attributes against the second half.
pub fn default_partition(n_attributes: usize) -> (Vec<usize>, Vec<usize>) {
    let h = n_attributes / 2;
    ((0..h).collect(), (h..n_attributes).collect())
}

fn check_partition(a1: &[usize], a2: &[usize], m: usize) -> Result<()> {
    let mut all: Vec<usize> = a1.iter().chain(a2).copied().collect();
    all.sort_unstable();
    if a1.is_empty() || a2.is_empty() || all != (0..m).collect::<Vec<_>>() {
        return Err(Error::param(
            "linkability partition must split the attributes into two non-empty disjoint sets",
        ));
    }
    Ok(())
}

/// Per target row: do the `k` nearest synthetic rows on `a1` and on `a2`
/// share at least one row?
pub fn link_outcomes(
    synth: &Dataset,
    targets: &Dataset,
    ranges: &[Option<(f64, f64)>],
    (a1, a2): (&[usize], &[usize]),
    k: usize,
) -> Result<Vec<bool>> {
    let nn = |attrs: &[usize]| {
        knn_by(targets.n_rows(), synth.n_rows(), k, false, |i, j| {
            gower_distance_on(targets.row(i), synth.row(j), attrs, ranges)
        })
    };
    let n1 = nn(a1)?;
    let n2 = nn(a2)?;
    Ok(n1
        .indices
        .iter()
        .zip(&n2.indices)
        .map(|(x, y)| x.iter().any(|i| y.contains(i)))
        .collect())
}

fn sample_targets(data: &Dataset, n_attacks: usize, seed: u64) -> Dataset {
    let n = n_attacks.min(data.n_rows());
    let mut idx = index::sample(&mut rng::rng(seed), data.n_rows(), n).into_vec();
    idx.sort_unstable();
    data.subset(&idx)
}

pub fn linkability_attack(
    synth: &Dataset,
    train: &Dataset,
    control: &Dataset,
    partition: (&[usize], &[usize]),
    k: usize,
    n_attacks: usize,
    seed: u64,
) -> Result<LinkabilityResult> {
    synth.schema().ensure_compatible(train.schema())?;
    synth.schema().ensure_compatible(control.schema())?;
    check_partition(partition.0, partition.1, synth.n_attributes())?;
    if k == 0 || k > synth.n_rows() {
        return Err(Error::KOutOfRange {
            k,
            max: synth.n_rows(),
        });
    }
    if train.is_empty() || control.is_empty() || n_attacks == 0 {
        return Err(Error::param("linkability needs targets"));
    }
    let ranges = train.gower_ranges();
    let run = |data: &Dataset, which: &str| -> Result<Vec<bool>> {
        let targets = sample_targets(data, n_attacks, rng::derive_seed(seed, &[rng::tag(which)]));
        link_outcomes(synth, &targets, &ranges, partition, k)
    };
    let train_outcomes = run(train, "link-train")?;
    let control_outcomes = run(control, "link-control")?;
    let est = |o: &[bool]| wilson_interval(o.iter().filter(|&&x| x).count(), o.len(), DEFAULT_CONFIDENCE);
    Ok(LinkabilityResult {
        train: est(&train_outcomes)?,
        control: est(&control_outcomes)?,
        train_outcomes,
        control_outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::mini_adult;
    use crate::tabular::gower_distance;

    fn brute_force(synth: &Dataset, targets: &Dataset, attrs: &[usize], k: usize, ranges: &[Option<(f64, f64)>]) -> Vec<Vec<usize>> {
        targets
            .rows()
            .iter()
            .map(|t| {
                let mut d: Vec<(f64, usize)> = synth
                    .rows()
                    .iter()
                    .enumerate()
                    .map(|(j, s)| (gower_distance_on(t, s, attrs, ranges), j))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d.into_iter().take(k).map(|x| x.1).collect()
            })
            .collect()
    }

    #[test]
    fn self_release_links_unique_rows() {
        let d = mini_adult(30, 4);
        let (a1, a2) = default_partition(d.n_attributes());
        let ranges = d.gower_ranges();
        let out = link_outcomes(&d, &d, &ranges, (&a1, &a2), 1).unwrap();
        let b1 = brute_force(&d, &d, &a1, 1, &ranges);
        let b2 = brute_force(&d, &d, &a2, 1, &ranges);
        for i in 0..d.n_rows() {
            assert_eq!(out[i], b1[i].iter().any(|x| b2[i].contains(x)));
        }
        // rows unique on both halves link to their own copy
        let unique = |i: usize, attrs: &[usize]| {
            d.rows()
                .iter()
                .filter(|r| gower_distance_on(r, d.row(i), attrs, &ranges) == 0.0)
                .count()
                == 1
        };
        for (i, &linked) in out.iter().enumerate() {
            if unique(i, &a1) && unique(i, &a2) {
                assert!(linked);
            }
        }
        assert!(gower_distance(d.row(0), d.row(0), d.schema(), &ranges) == 0.0);
    }

    #[test]
    fn full_neighborhoods_always_link() {
        let synth = mini_adult(20, 1);
        let train = mini_adult(40, 2);
        let (a1, a2) = default_partition(8);
        let res = linkability_attack(&synth, &train, &train, (&a1, &a2), 20, 40, 0).unwrap();
        assert_eq!(res.train.successes, 40);
    }

    #[test]
    fn non_decreasing_in_k() {
        let synth = mini_adult(200, 1);
        let train = mini_adult(200, 2);
        let (a1, a2) = default_partition(8);
        let mut last = 0;
        for k in [1, 2, 5, 10] {
            let r = linkability_attack(&synth, &train, &train, (&a1, &a2), k, 100, 7).unwrap();
            assert!(r.train.successes >= last);
            last = r.train.successes;
        }
    }

    #[test]
    fn bad_partition_rejected() {
        let d = mini_adult(10, 1);
        assert!(linkability_attack(&d, &d, &d, (&[0, 1], &[1, 2]), 1, 5, 0).is_err());
        assert!(linkability_attack(&d, &d, &d, (&[], &[0, 1, 2, 3, 4, 5, 6, 7]), 1, 5, 0).is_err());
        let (a1, a2) = default_partition(8);
        assert!(matches!(
            linkability_attack(&d, &d, &d, (&a1, &a2), 11, 5, 0),
            Err(Error::KOutOfRange { .. })
        ));
    }
}
