//! Attribute inference: nearest-neighbor lookup, a learned model, and the
//! generalized targeted correct attribution probability (GTCAP).

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learner::{LearnerSpec, Tree};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{wilson_interval, RiskEstimate};
use crate::tabular::{embed, gower_distance_on, knn_by, Dataset, ScalingParams, Value};

/// Attacker knowledge: quasi-identifier attributes and the target attribute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxInfo {
    pub keys: Vec<usize>,
    pub target: usize,
}

impl AuxInfo {
    pub fn new(keys: Vec<usize>, target: usize, n_attributes: usize) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::param("attribute inference needs at least one key"));
        }
        if target >= n_attributes || keys.iter().any(|&k| k >= n_attributes) {
            return Err(Error::param("key or target attribute out of range"));
        }
        if keys.contains(&target) {
            return Err(Error::param("target attribute cannot be a key"));
        }
        Ok(AuxInfo { keys, target })
    }

    pub fn from_names<S: AsRef<str>>(schema: &crate::tabular::Schema, keys: &[S], target: &str) -> Result<Self> {
        let keys = schema.indices_of(keys)?;
        let target = schema.indices_of(&[target])?[0];
        AuxInfo::new(keys, target, schema.len())
    }

    /// Every attribute except the target is a key.
    pub fn all_but(target: usize, n_attributes: usize) -> Result<Self> {
        AuxInfo::new((0..n_attributes).filter(|&a| a != target).collect(), target, n_attributes)
    }
}

/// How guesses for a numeric target are scored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NumericScoring {
    /// Success when `|guess - truth| / range <= tolerance`.
    Tolerance { tolerance: f64 },
    Nrmse,
}

impl Default for NumericScoring {
    fn default() -> Self {
        NumericScoring::Tolerance { tolerance: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InferenceScore {
    Rate(RiskEstimate),
    Nrmse { value: f64, n: usize },
}

impl InferenceScore {
    pub fn value(&self) -> f64 {
        match self {
            InferenceScore::Rate(r) => r.rate,
            InferenceScore::Nrmse { value, .. } => *value,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            InferenceScore::Rate(r) => r.n,
            InferenceScore::Nrmse { n, .. } => *n,
        }
    }

    pub fn as_rate(&self) -> Option<&RiskEstimate> {
        match self {
            InferenceScore::Rate(r) => Some(r),
            InferenceScore::Nrmse { .. } => None,
        }
    }
}

/// Guesses and truths for one target table, kept for resampling.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GuessSet {
    pub truth: Vec<Value>,
    pub guesses: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeInference {
    pub train: InferenceScore,
    pub control: InferenceScore,
    #[serde(skip)]
    pub train_guesses: GuessSet,
    #[serde(skip)]
    pub control_guesses: GuessSet,
    #[serde(skip)]
    pub scorer: Scorer,
}

/// Turns guess sets into scores with a fixed target range and confidence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scorer {
    pub numeric: Option<NumericScoring>,
    pub range: f64,
    pub confidence: f64,
}

impl Scorer {
    fn success(&self, truth: Value, guess: Value) -> bool {
        match (truth, self.numeric) {
            (Value::Num(t), Some(NumericScoring::Tolerance { tolerance })) => {
                let g = guess.as_f64();
                if self.range > 0.0 {
                    (t - g).abs() / self.range <= tolerance
                } else {
                    t == g
                }
            }
            _ => truth == guess,
        }
    }

    pub fn outcomes(&self, set: &GuessSet) -> Vec<bool> {
        set.truth
            .iter()
            .zip(&set.guesses)
            .map(|(&t, &g)| self.success(t, g))
            .collect()
    }

    pub fn score(&self, set: &GuessSet) -> Result<InferenceScore> {
        if set.truth.is_empty() {
            return Err(Error::param("no inference targets"));
        }
        if self.numeric == Some(NumericScoring::Nrmse) {
            let y: Vec<f64> = set.truth.iter().map(|v| v.as_f64()).collect();
            let yhat: Vec<f64> = set.guesses.iter().map(|v| v.as_f64()).collect();
            let rmse = rmse(&y, &yhat);
            if !(self.range > 0.0) {
                return Err(Error::DegenerateTarget);
            }
            return Ok(InferenceScore::Nrmse {
                value: 1.0 - rmse / self.range,
                n: y.len(),
            });
        }
        let hits = self.outcomes(set).iter().filter(|&&o| o).count();
        Ok(InferenceScore::Rate(wilson_interval(hits, set.truth.len(), self.confidence)?))
    }

    /// Score of a resample given by row indices into `set`.
    pub fn score_subset(&self, set: &GuessSet, rows: &[usize]) -> Result<InferenceScore> {
        self.score(&GuessSet {
            truth: rows.iter().map(|&i| set.truth[i]).collect(),
            guesses: rows.iter().map(|&i| set.guesses[i]).collect(),
        })
    }
}

fn rmse(y: &[f64], yhat: &[f64]) -> f64 {
    (y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64).sqrt()
}

/// `1 - RMSE(y, yhat) / (max(y) - min(y))`.
pub fn nrmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(Error::param("nrmse needs equal-length non-empty inputs"));
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateTarget);
    }
    Ok(1.0 - rmse(y, yhat) / (hi - lo))
}

fn sample_targets(data: &Dataset, n_attacks: usize, seed: u64) -> Dataset {
    let n = n_attacks.min(data.n_rows());
    let mut idx = index::sample(&mut rng::rng(seed), data.n_rows(), n).into_vec();
    idx.sort_unstable();
    data.subset(&idx)
}

fn guess_set(targets: &Dataset, target: usize, guesses: Vec<Value>) -> GuessSet {
    GuessSet {
        truth: targets.rows().iter().map(|r| r[target]).collect(),
        guesses,
    }
}

/// Guesses the target of every row of `targets` from its nearest synthetic
/// row under the Gower distance on the keys (ties: lowest synthetic index).
pub fn aia_distance_on(
    synth: &Dataset,
    targets: &Dataset,
    aux: &AuxInfo,
    ranges: &[Option<(f64, f64)>],
) -> Result<Vec<Value>> {
    if synth.is_empty() {
        return Err(Error::param("attribute inference on an empty synthetic dataset"));
    }
    let nn = knn_by(targets.n_rows(), synth.n_rows(), 1, false, |i, j| {
        gower_distance_on(targets.row(i), synth.row(j), &aux.keys, ranges)
    })?;
    Ok(nn.indices.iter().map(|ix| synth.row(ix[0])[aux.target]).collect())
}

fn scorer_for(train: &Dataset, aux: &AuxInfo, numeric: NumericScoring, confidence: f64) -> Scorer {
    let is_num = train.schema().attribute(aux.target).is_numeric();
    let range = train.numeric_range(aux.target).map_or(0.0, |(lo, hi)| hi - lo);
    Scorer {
        numeric: is_num.then_some(numeric),
        range,
        confidence,
    }
}

fn run_inference<F>(
    train: &Dataset,
    control: &Dataset,
    aux: &AuxInfo,
    scorer: Scorer,
    n_attacks: usize,
    seed: u64,
    guess: F,
) -> Result<AttributeInference>
where
    F: Fn(&Dataset) -> Result<Vec<Value>>,
{
    if train.is_empty() || control.is_empty() || n_attacks == 0 {
        return Err(Error::param("attribute inference needs targets"));
    }
    let mut sets = Vec::with_capacity(2);
    for (data, which) in [(train, "aia-train"), (control, "aia-control")] {
        let targets = sample_targets(data, n_attacks, rng::derive_seed(seed, &[rng::tag(which)]));
        let g = guess(&targets)?;
        sets.push(guess_set(&targets, aux.target, g));
    }
    let control_guesses = sets.pop().expect("two sets");
    let train_guesses = sets.pop().expect("two sets");
    Ok(AttributeInference {
        train: scorer.score(&train_guesses)?,
        control: scorer.score(&control_guesses)?,
        train_guesses,
        control_guesses,
        scorer,
    })
}

/// Nearest-neighbor attribute inference against up to `n_attacks` train and
/// control targets. Gower ranges and the numeric target range come from
/// `train`.
#[allow(clippy::too_many_arguments)]
pub fn aia_distance(
    synth: &Dataset,
    train: &Dataset,
    control: &Dataset,
    aux: &AuxInfo,
    numeric: NumericScoring,
    n_attacks: usize,
    confidence: f64,
    seed: u64,
) -> Result<AttributeInference> {
    synth.schema().ensure_compatible(train.schema())?;
    synth.schema().ensure_compatible(control.schema())?;
    let ranges = train.gower_ranges();
    let scorer = scorer_for(train, aux, numeric, confidence);
    run_inference(train, control, aux, scorer, n_attacks, seed, |t| {
        aia_distance_on(synth, t, aux, &ranges)
    })
}

/// Fits a tree on the synthetic keys and predicts the target of `targets`.
pub fn aia_ml_on(synth: &Dataset, targets: &Dataset, aux: &AuxInfo, learner: &LearnerSpec) -> Result<Vec<Value>> {
    if synth.is_empty() {
        return Err(Error::param("attribute inference on an empty synthetic dataset"));
    }
    // targets may carry levels the synthetic data never produced
    let wide = synth.with_rows(vec![])?.concat(&targets.with_rows(vec![])?)?;
    let params = ScalingParams::fit(&synth.conform_to(wide.schema())?);
    let xs = embed(synth, Some(&params))?;
    let cols = xs.columns_for(&aux.keys);
    let xs = xs.select_columns(&cols);
    let xt = embed(targets, Some(&params))?.select_columns(&cols);
    if synth.schema().attribute(aux.target).is_numeric() {
        let y: Vec<f64> = synth.rows().iter().map(|r| r[aux.target].as_f64()).collect();
        let tree = Tree::fit_regressor(&xs, &y, learner)?;
        Ok(tree.predict(&xt).into_iter().map(Value::Num).collect())
    } else {
        let y: Vec<u32> = synth.rows().iter().map(|r| r[aux.target].cat().expect("categorical")).collect();
        let tree = Tree::fit_classifier(&xs, &y, learner)?;
        Ok(tree.predict_class(&xt).into_iter().map(Value::Cat).collect())
    }
}

/// Model-based attribute inference: classification targets are scored by
/// accuracy, numeric targets by NRMSE.
#[allow(clippy::too_many_arguments)]
pub fn aia_ml(
    synth: &Dataset,
    train: &Dataset,
    control: &Dataset,
    aux: &AuxInfo,
    learner: &LearnerSpec,
    n_attacks: usize,
    confidence: f64,
    seed: u64,
) -> Result<AttributeInference> {
    synth.schema().ensure_compatible(train.schema())?;
    synth.schema().ensure_compatible(control.schema())?;
    let scorer = scorer_for(train, aux, NumericScoring::Nrmse, confidence);
    run_inference(train, control, aux, scorer, n_attacks, seed, |t| {
        aia_ml_on(synth, t, aux, learner)
    })
}

/// Per synthetic row: the generalized TCAP, or `None` when no truth row
/// falls in its key equivalence class. Numeric attributes match when
/// `|x - y| / range <= radius` with ranges taken from `truth`.
pub fn gtcap_rows(synth: &Dataset, truth: &Dataset, keys: &[usize], target: usize, radius: f64) -> Result<Vec<Option<f64>>> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::param(format!("radius {radius} not in (0, 1)")));
    }
    synth.schema().ensure_compatible(truth.schema())?;
    let ranges = truth.gower_ranges();
    let matches = |a: &[Value], b: &[Value], attr: usize| within(a[attr], b[attr], ranges[attr], radius);
    Ok(synth
        .rows()
        .par_iter()
        .map(|s| {
            let mut class = 0usize;
            let mut hit = 0usize;
            for t in truth.rows() {
                if keys.iter().all(|&a| matches(s, t, a)) {
                    class += 1;
                    hit += matches(s, t, target) as usize;
                }
            }
            (class > 0).then(|| hit as f64 / class as f64)
        })
        .collect())
}

fn within(a: Value, b: Value, range: Option<(f64, f64)>, radius: f64) -> bool {
    match range {
        Some((lo, hi)) if hi > lo => (a.as_f64() - b.as_f64()).abs() / (hi - lo) <= radius,
        _ => a == b,
    }
}

/// Mean generalized TCAP over synthetic rows with a non-empty key class;
/// 0 when no row contributes.
pub fn gtcap(synth: &Dataset, truth: &Dataset, keys: &[usize], target: usize, radius: f64) -> Result<f64> {
    let rows = gtcap_rows(synth, truth, keys, target, radius)?;
    Ok(mean_defined(&rows))
}

pub(crate) fn mean_defined(rows: &[Option<f64>]) -> f64 {
    let (sum, n) = rows
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
