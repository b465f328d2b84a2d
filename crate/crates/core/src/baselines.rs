//! Baselines that separate memorized information from population-level
//! inference: the control-set adjustment and the canary-record protocol.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{aia_distance_on, aia_ml_on, AuxInfo, LearnerSpec, NumericScoring};
use crate::error::{Error, Result};
use crate::rng;
use crate::risk::SynthesizerSpec;
use crate::tabular::{Dataset, Record, Value};

/// `(e_train - e_control) / (e_star - e_control)`: the share of attack
/// success that the control set does not explain.
pub fn control_adjusted(e_train: f64, e_control: f64, e_star: f64) -> Result<f64> {
    if !(e_star > e_control) {
        return Err(Error::DegenerateBaseline { e_star, e_control });
    }
    Ok((e_train - e_control) / (e_star - e_control))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub e_train: f64,
    pub e_control: f64,
    pub e_star: f64,
    #[serde(rename = "E")]
    pub adjusted: f64,
}

impl BaselineResult {
    pub fn new(e_train: f64, e_control: f64, e_star: f64) -> Result<Self> {
        Ok(BaselineResult {
            e_train,
            e_control,
            e_star,
            adjusted: control_adjusted(e_train, e_control, e_star)?,
        })
    }
}

/// Copy of `record` with the target replaced by a uniform draw: over the
/// vocabulary for a categorical target, over the training range of `train`
/// for a numeric one.
pub fn make_canary(record: &[Value], target: usize, train: &Dataset, seed: u64) -> Result<Record> {
    if target >= record.len() {
        return Err(Error::param(format!("target attribute {target} out of range")));
    }
    let mut rng = rng::rng(seed);
    let mut out = record.to_vec();
    out[target] = match train.schema().attribute(target).vocabulary() {
        Some(vocab) => Value::Cat(rng.random_range(0..vocab.len() as u32)),
        None => {
            let (lo, hi) = train
                .observed_range(target)
                .ok_or_else(|| Error::param("canary target range of an empty training set"))?;
            Value::Num(if hi > lo { rng.random_range(lo..=hi) } else { lo })
        }
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanaryPlan {
    pub n_canaries: usize,
    pub target: usize,
    pub seed: u64,
}

impl CanaryPlan {
    pub fn new(target: usize, seed: u64) -> Self {
        CanaryPlan {
            n_canaries: 100,
            target,
            seed,
        }
    }
}

/// Generator refitted for every canary dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanaryGenerator {
    /// Emits its training data verbatim.
    Copier,
    /// Copier that first permutes the target column, severing every link
    /// between the target and the other attributes.
    TargetShuffle { target: usize },
    Synth { spec: SynthesizerSpec },
}

impl CanaryGenerator {
    pub fn generate(&self, train: &Dataset, seed: u64) -> Result<Dataset> {
        match self {
            CanaryGenerator::Copier => Ok(train.clone()),
            CanaryGenerator::TargetShuffle { target } => {
                let mut values: Vec<Value> = train.rows().iter().map(|r| r[*target]).collect();
                values.shuffle(&mut rng::rng(seed));
                let rows = train
                    .rows()
                    .iter()
                    .zip(values)
                    .map(|(r, v)| {
                        let mut r = r.clone();
                        r[*target] = v;
                        r
                    })
                    .collect();
                train.with_rows(rows)
            }
            CanaryGenerator::Synth { spec } => spec.generate(train, train.n_rows(), seed),
        }
    }
}

/// Attack run against a single target record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanaryAttack {
    Distance { numeric: NumericScoring },
    Ml { learner: LearnerSpec },
    /// Share of synthetic rows in the target's key class that carry the
    /// target's value.
    Gtcap { radius: f64 },
}

impl CanaryAttack {
    /// Success of the attack on `record`, in `[0, 1]`. Numeric targets use
    /// a tolerance window scaled by the training range `range`.
    pub fn success(&self, synth: &Dataset, record: &[Value], aux: &AuxInfo, range: f64) -> Result<f64> {
        let one = synth.with_rows(vec![record.to_vec()])?;
        let truth = record[aux.target];
        let hit = |guess: Value, tolerance: f64| match truth {
            Value::Num(t) if range > 0.0 => (t - guess.as_f64()).abs() / range <= tolerance,
            _ => truth == guess,
        };
        match self {
            CanaryAttack::Distance { numeric } => {
                let guess = aia_distance_on(synth, &one, aux, &synth.gower_ranges())?[0];
                let tol = match numeric {
                    NumericScoring::Tolerance { tolerance } => *tolerance,
                    NumericScoring::Nrmse => 0.05,
                };
                Ok(hit(guess, tol) as u8 as f64)
            }
            CanaryAttack::Ml { learner } => {
                let guess = aia_ml_on(synth, &one, aux, learner)?[0];
                Ok(hit(guess, 0.05) as u8 as f64)
            }
            CanaryAttack::Gtcap { radius } => {
                let ranges = synth.gower_ranges();
                let close = |a: Value, b: Value, attr: usize| match ranges[attr] {
                    Some((lo, hi)) if hi > lo => (a.as_f64() - b.as_f64()).abs() / (hi - lo) <= *radius,
                    _ => a == b,
                };
                let mut class = 0usize;
                let mut hits = 0usize;
                for s in synth.rows() {
                    if aux.keys.iter().all(|&k| close(s[k], record[k], k)) {
                        class += 1;
                        hits += close(s[aux.target], truth, aux.target) as usize;
                    }
                }
                Ok(if class == 0 { 0.0 } else { hits as f64 / class as f64 })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanaryReport {
    pub canary_rate: f64,
    pub train_rate: f64,
    pub n_completed: usize,
    pub n_failed: usize,
    /// Per-canary successes, in canary order.
    pub canary_successes: Vec<f64>,
}

impl CanaryReport {
    /// Standard error of the mean canary success.
    pub fn canary_std_error(&self) -> f64 {
        crate::stats::std_dev(&self.canary_successes) / (self.canary_successes.len() as f64).sqrt()
    }
}

/// For each of `plan.n_canaries` training records: replace its target by a
/// uniform draw, refit the generator on the modified data, and attack the
/// canary. The same attack against the unmodified records, on a release
/// generated from the unmodified training data, gives `train_rate`.
pub fn canary_baseline(
    train: &Dataset,
    generator: &CanaryGenerator,
    attack: &CanaryAttack,
    aux: &AuxInfo,
    plan: &CanaryPlan,
) -> Result<CanaryReport> {
    if plan.n_canaries == 0 {
        return Err(Error::param("need at least one canary"));
    }
    if plan.target != aux.target {
        return Err(Error::param("canary target differs from the attacked attribute"));
    }
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    let n = plan.n_canaries.min(train.n_rows());
    if n < plan.n_canaries {
        log::warn!("only {n} training rows available for {} canaries", plan.n_canaries);
    }
    let rows = index::sample(&mut rng::rng(plan.seed), train.n_rows(), n).into_vec();
    let range = train.observed_range(aux.target).map_or(0.0, |(lo, hi)| hi - lo);

    let base_synth = generator.generate(train, rng::derive_seed(plan.seed, &[rng::tag("canary-base")]))?;
    let train_hits: Vec<f64> = rows
        .par_iter()
        .map(|&i| attack.success(&base_synth, train.row(i), aux, range))
        .collect::<Result<_>>()?;

    let outcomes: Vec<Result<f64>> = rows
        .par_iter()
        .enumerate()
        .map(|(c, &i)| {
            let seed = rng::derive_seed(plan.seed, &[rng::tag("canary"), c as u64]);
            let canary = make_canary(train.row(i), plan.target, train, seed)?;
            let mut modified = train.rows().to_vec();
            modified[i] = canary.clone();
            let modified = train.with_rows(modified)?;
            let synth = generator.generate(&modified, rng::derive_seed(seed, &[1]))?;
            attack.success(&synth, &canary, aux, range)
        })
        .collect();
    let mut canary_successes = Vec::with_capacity(n);
    let mut n_failed = 0;
    for (c, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => canary_successes.push(v),
            Err(e) => {
                log::warn!("canary {c} failed: {e}");
                n_failed += 1;
            }
        }
    }
    if canary_successes.is_empty() {
        return Err(Error::Other("every canary run failed".into()));
    }
    Ok(CanaryReport {
        canary_rate: crate::stats::mean(&canary_successes),
        train_rate: crate::stats::mean(&train_hits),
        n_completed: canary_successes.len(),
        n_failed,
        canary_successes,
    })
}
