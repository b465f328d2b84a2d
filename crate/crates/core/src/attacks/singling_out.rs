//! Uniqueness-based membership inference ("singling out").
//!
//! Predicates are mined from the synthetic data alone: a predicate is a
//! guess when exactly one synthetic row satisfies it. The guess is correct
//! when exactly one row of the target table satisfies it as well.

use std::collections::HashSet;

use rand::seq::{index, IndexedRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AttackConfig;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{self, wilson_interval, RiskEstimate};
use crate::tabular::{Dataset, Value};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Condition {
    Eq { attr: usize, level: u32 },
    Le { attr: usize, value: f64 },
    Ge { attr: usize, value: f64 },
}

impl Condition {
    #[inline]
    pub fn holds(&self, row: &[Value]) -> bool {
        match *self {
            Condition::Eq { attr, level } => row[attr] == Value::Cat(level),
            Condition::Le { attr, value } => row[attr].num().is_some_and(|x| x <= value),
            Condition::Ge { attr, value } => row[attr].num().is_some_and(|x| x >= value),
        }
    }

    fn key(&self) -> (usize, u8, u64) {
        match *self {
            Condition::Eq { attr, level } => (attr, 0, level as u64),
            Condition::Le { attr, value } => (attr, 1, value.to_bits()),
            Condition::Ge { attr, value } => (attr, 2, value.to_bits()),
        }
    }
}

/// Conjunction of conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predicate(pub Vec<Condition>);

impl Predicate {
    pub fn holds(&self, row: &[Value]) -> bool {
        self.0.iter().all(|c| c.holds(row))
    }

    /// Number of rows satisfying the predicate, saturating at 2.
    pub fn count_capped(&self, data: &Dataset) -> usize {
        let mut n = 0;
        for row in data.rows() {
            if self.holds(row) {
                n += 1;
                if n == 2 {
                    break;
                }
            }
        }
        n
    }

    pub fn singles_out(&self, data: &Dataset) -> bool {
        self.count_capped(data) == 1
    }

    fn key(&self) -> Vec<(usize, u8, u64)> {
        let mut k: Vec<_> = self.0.iter().map(Condition::key).collect();
        k.sort_unstable();
        k
    }
}

/// Guesses of one pass with their outcomes against one target table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessBatch {
    pub guesses: Vec<Predicate>,
    pub outcomes: Vec<bool>,
    pub n_attacks: usize,
}

impl GuessBatch {
    pub fn evaluate(guesses: Vec<Predicate>, target: &Dataset, n_attacks: usize) -> Self {
        let outcomes = guesses.par_iter().map(|g| g.singles_out(target)).collect();
        GuessBatch {
            guesses,
            outcomes,
            n_attacks,
        }
    }

    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|&&o| o).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassResult {
    /// `0` for the univariate pass, otherwise the attribute-subset size.
    pub n_attributes: usize,
    pub attempts: usize,
    pub train: RiskEstimate,
    pub control: RiskEstimate,
    #[serde(skip)]
    pub train_outcomes: Vec<bool>,
    #[serde(skip)]
    pub control_outcomes: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinglingOutResult {
    pub train: RiskEstimate,
    pub control: RiskEstimate,
    /// Index into `passes` of the reported (highest train rate) pass.
    pub best_pass: usize,
    pub passes: Vec<PassResult>,
}

/// Univariate predicates: rare categorical levels and the extreme values of
/// numeric attributes, kept when they single out a synthetic row.
fn univariate_guesses(synth: &Dataset, n_attacks: usize) -> (Vec<Predicate>, usize) {
    let mut out = Vec::new();
    let mut attempts = 0;
    for attr in 0..synth.n_attributes() {
        let candidates: Vec<Condition> = if synth.schema().attribute(attr).is_numeric() {
            match synth.observed_range(attr) {
                Some((lo, hi)) => vec![
                    Condition::Le { attr, value: lo },
                    Condition::Ge { attr, value: hi },
                ],
                None => vec![],
            }
        } else {
            synth
                .category_counts(attr)
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(level, _)| Condition::Eq {
                    attr,
                    level: level as u32,
                })
                .collect()
        };
        for c in candidates {
            attempts += 1;
            let p = Predicate(vec![c]);
            if p.singles_out(synth) && !out.contains(&p) {
                out.push(p);
            }
            if out.len() >= n_attacks {
                return (out, attempts);
            }
        }
    }
    (out, attempts)
}

/// Multivariate predicates on `n_attrs` randomly chosen attributes of a
/// randomly chosen synthetic record. Numeric conditions point away from the
/// synthetic median (`>= v` above it, `<= v` otherwise).
fn multivariate_guesses(
    synth: &Dataset,
    n_attrs: usize,
    n_attacks: usize,
    max_attempts: usize,
    seed: u64,
) -> (Vec<Predicate>, usize) {
    let m = synth.n_attributes();
    let medians: Vec<Option<f64>> = (0..m)
        .map(|a| {
            let col = synth.numeric_column(a);
            (!col.is_empty()).then(|| stats::percentile(&col, 50.0))
        })
        .collect();
    let mut rng = rng::rng(seed);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut attempts = 0;
    let rows: Vec<usize> = (0..synth.n_rows()).collect();
    // Attempts are generated in chunks and checked in parallel; acceptance
    // is applied sequentially so the result does not depend on threading.
    let chunk = 256;
    while out.len() < n_attacks && attempts < max_attempts {
        let batch: Vec<Predicate> = (0..chunk.min(max_attempts - attempts))
            .map(|_| {
                let &r = rows.choose(&mut rng).expect("non-empty synth");
                let row = synth.row(r);
                let mut attrs = index::sample(&mut rng, m, n_attrs).into_vec();
                attrs.sort_unstable();
                Predicate(
                    attrs
                        .into_iter()
                        .map(|attr| match (row[attr], medians[attr]) {
                            (Value::Cat(level), _) => Condition::Eq { attr, level },
                            (Value::Num(value), Some(med)) if value > med => {
                                Condition::Ge { attr, value }
                            }
                            (Value::Num(value), _) => Condition::Le { attr, value },
                        })
                        .collect(),
                )
            })
            .collect();
        let unique: Vec<bool> = batch.par_iter().map(|p| p.singles_out(synth)).collect();
        for (p, u) in batch.into_iter().zip(unique) {
            attempts += 1;
            if u && seen.insert(p.key()) {
                out.push(p);
                if out.len() >= n_attacks {
                    break;
                }
            }
        }
    }
    (out, attempts)
}

fn estimate(outcomes: &[bool], attempts: usize, confidence: f64) -> Result<RiskEstimate> {
    let successes = outcomes.iter().filter(|&&o| o).count();
    let n = if outcomes.is_empty() { attempts.max(1) } else { outcomes.len() };
    wilson_interval(successes, n, confidence)
}

/// Guesses a pass needs to be eligible as the reported pass.
pub const MIN_PASS_GUESSES: usize = 30;

/// Runs a univariate pass and one multivariate pass per subset size in
/// `cfg.attr_count_range` (capped at the number of attributes) and reports
/// the pass with the highest train rate among passes with at least
/// [`MIN_PASS_GUESSES`] guesses.
pub fn singling_out_mia(
    synth: &Dataset,
    train: &Dataset,
    control: &Dataset,
    cfg: &AttackConfig,
) -> Result<SinglingOutResult> {
    cfg.validate()?;
    synth.schema().ensure_compatible(train.schema())?;
    synth.schema().ensure_compatible(control.schema())?;
    if synth.is_empty() || train.is_empty() || control.is_empty() {
        return Err(Error::param("singling out needs non-empty synth, train and control"));
    }
    let ratio = train.n_rows() as f64 / control.n_rows() as f64;
    if !(0.5..=2.0).contains(&ratio) {
        log::warn!(
            "singling out: train ({}) and control ({}) sizes differ widely",
            train.n_rows(),
            control.n_rows()
        );
    }

    let m = synth.n_attributes();
    let (lo, hi) = cfg.attr_count_range;
    let mut pass_specs = vec![0];
    pass_specs.extend((lo..=hi.min(m)).filter(|&s| s >= 2));

    let mut passes = Vec::with_capacity(pass_specs.len());
    for &size in &pass_specs {
        let (guesses, attempts) = if size == 0 {
            univariate_guesses(synth, cfg.n_attacks)
        } else {
            let seed = rng::derive_seed(cfg.seed, &[rng::tag("singling-out"), size as u64]);
            multivariate_guesses(synth, size, cfg.n_attacks, cfg.n_attacks * 20, seed)
        };
        let train_batch = GuessBatch::evaluate(guesses.clone(), train, cfg.n_attacks);
        let control_batch = GuessBatch::evaluate(guesses, control, cfg.n_attacks);
        passes.push(PassResult {
            n_attributes: size,
            attempts,
            train: estimate(&train_batch.outcomes, attempts, cfg.confidence)?,
            control: estimate(&control_batch.outcomes, attempts, cfg.confidence)?,
            train_outcomes: train_batch.outcomes,
            control_outcomes: control_batch.outcomes,
        });
    }
    let best_pass = best_pass(&passes);
    Ok(SinglingOutResult {
        train: passes[best_pass].train,
        control: passes[best_pass].control,
        best_pass,
        passes,
    })
}

// tiny passes have Wilson centers pulled toward 1/2; they only compete
// when no pass reaches the minimum
fn best_pass(passes: &[PassResult]) -> usize {
    let eligible: Vec<usize> = match (0..passes.len()).filter(|&i| passes[i].train.n >= MIN_PASS_GUESSES).collect::<Vec<_>>() {
        v if v.is_empty() => (0..passes.len()).collect(),
        v => v,
    };
    eligible[1..]
        .iter()
        .fold(eligible[0], |best, &i| if passes[i].train.rate > passes[best].train.rate { i } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::mini_adult;

    fn brute_force_singles_out(p: &Predicate, data: &Dataset) -> bool {
        data.rows()
            .iter()
            .filter(|row| {
                p.0.iter().all(|c| match *c {
                    Condition::Eq { attr, level } => row[attr].cat() == Some(level),
                    Condition::Le { attr, value } => row[attr].as_f64() <= value,
                    Condition::Ge { attr, value } => row[attr].as_f64() >= value,
                })
            })
            .count()
            == 1
    }

    fn small_cfg() -> AttackConfig {
        AttackConfig {
            n_attacks: 200,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn synth_equal_train_singles_out_everything() {
        let train = mini_adult(50, 1);
        let control = mini_adult(50, 2);
        let res = singling_out_mia(&train, &train, &control, &small_cfg()).unwrap();
        let best = &res.passes[res.best_pass];
        assert!(best.train_outcomes.iter().all(|&o| o));
        assert!(res.train.rate > 0.95, "{:?}", res.train);
        assert!(res.train.rate > res.control.rate);
    }

    #[test]
    fn outcomes_match_brute_force() {
        let synth = mini_adult(40, 5);
        let train = mini_adult(40, 6);
        for size in [3, 5] {
            let (guesses, _) = multivariate_guesses(&synth, size, 50, 2000, 9);
            assert!(!guesses.is_empty());
            let batch = GuessBatch::evaluate(guesses.clone(), &train, 50);
            for (g, o) in guesses.iter().zip(&batch.outcomes) {
                assert!(brute_force_singles_out(g, &synth));
                assert_eq!(*o, brute_force_singles_out(g, &train));
            }
        }
        let (uni, _) = univariate_guesses(&synth, 50);
        for g in &uni {
            assert!(brute_force_singles_out(g, &synth));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let synth = mini_adult(80, 1);
        let train = mini_adult(80, 2);
        let control = mini_adult(80, 3);
        let a = singling_out_mia(&synth, &train, &control, &small_cfg()).unwrap();
        let b = singling_out_mia(&synth, &train, &control, &small_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unrelated_synth_train_matches_control() {
        let synth = mini_adult(300, 1);
        let train = mini_adult(300, 2);
        let control = mini_adult(300, 3);
        let res = singling_out_mia(&synth, &train, &control, &small_cfg()).unwrap();
        let gap = (res.train.rate - res.control.rate).abs();
        let se = res.train.half_width + res.control.half_width;
        assert!(gap <= se, "train {:?} control {:?}", res.train, res.control);
    }

    #[test]
    fn caps_subset_size_at_attribute_count() {
        let d = mini_adult(30, 1);
        let res = singling_out_mia(&d, &d, &d, &small_cfg()).unwrap();
        let sizes: Vec<usize> = res.passes.iter().map(|p| p.n_attributes).collect();
        assert_eq!(sizes, vec![0, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn small_passes_compete_only_when_nothing_qualifies() {
        let d = mini_adult(300, 1);
        let res = singling_out_mia(&d, &mini_adult(300, 2), &d, &small_cfg()).unwrap();
        let mut passes = res.passes.clone();
        passes.truncate(2);
        passes[0].train.n = 5;
        passes[0].train.rate = 0.9;
        passes[1].train.n = MIN_PASS_GUESSES;
        passes[1].train.rate = 0.2;
        assert_eq!(best_pass(&passes), 1);
        passes[1].train.n = MIN_PASS_GUESSES - 1;
        assert_eq!(best_pass(&passes), 0);
        assert!(res.passes[res.best_pass].train.n >= MIN_PASS_GUESSES);
    }
}
