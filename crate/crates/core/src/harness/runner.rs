use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_indices, rate_of, BootstrapSummary};
use super::config::{AuxSpec, ExperimentConfig, Metric, RiskModel};
use super::correlation::{correlation_matrix, CorrelationMatrix};
use super::utility::mle_utility;
use crate::attacks::{
    aia_distance, aia_ml, domias_mia, gtcap_rows, linkability_attack, singling_out_mia, AttackConfig,
    AttributeInference,
};
use crate::attacks::{default_partition, mean_defined};
use crate::baselines::control_adjusted;
use crate::error::{Error, Result};
use crate::indicators::{dcr_components, ims_matches, IndicatorConfig};
use crate::risk::{fit_dp_marginal, leaky_release, load_external_synth, LossOptimum};
use crate::rng::{self, derive_seed, tag};
use crate::stats;
use crate::tabular::{remove_outliers_lof, split, Dataset};

pub const STAGE_GRID: &str = "grid";
pub const STAGE_OUTLIERS: &str = "outliers";
pub const STAGE_SWEEP: &str = "sweep";
pub const UTILITY_METRIC: &str = "mle_utility";

/// One cell of the report: a metric evaluated on one synthetic release.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub stage: String,
    pub risk_model: String,
    pub risk_value: f64,
    pub outlier_fraction: f64,
    pub metric: String,
    pub value: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub stdev: Option<f64>,
    pub runtime_seconds: f64,
    pub control_adjusted: bool,
    pub error: Option<String>,
}

impl ResultRow {
    /// Same cell ignoring wall-clock runtime.
    pub fn same_result(&self, other: &ResultRow) -> bool {
        ResultRow {
            runtime_seconds: 0.0,
            ..self.clone()
        } == ResultRow {
            runtime_seconds: 0.0,
            ..other.clone()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ResultRow>,
    /// Keyed by risk model name; grid stage only.
    pub correlations: BTreeMap<String, CorrelationMatrix>,
    /// Every seed used, by purpose.
    pub seeds: BTreeMap<String, u64>,
}

impl ExperimentReport {
    pub fn extend(&mut self, other: ExperimentReport) {
        self.rows.extend(other.rows);
        self.correlations.extend(other.correlations);
        self.seeds.extend(other.seeds);
    }

    /// Raw value of `metric` at `risk_value` in the given stage and model.
    pub fn value(&self, stage: &str, risk_model: &str, risk_value: f64, metric: &str) -> Option<f64> {
        self.find(stage, risk_model, risk_value, 0.0, metric).and_then(|r| r.value)
    }

    pub fn find(&self, stage: &str, risk_model: &str, risk_value: f64, outlier_fraction: f64, metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.stage == stage
                && r.risk_model == risk_model
                && r.risk_value == risk_value
                && r.outlier_fraction == outlier_fraction
                && r.metric == metric
                && !r.control_adjusted
        })
    }

    /// Raw values of `metric` ordered by risk value.
    pub fn series(&self, stage: &str, risk_model: &str, metric: &str) -> Vec<(f64, Option<f64>)> {
        let mut out: Vec<(f64, Option<f64>)> = self
            .rows
            .iter()
            .filter(|r| {
                r.stage == stage && r.risk_model == risk_model && r.metric == metric && !r.control_adjusted && r.outlier_fraction == 0.0
            })
            .map(|r| (r.risk_value, r.value))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

/// Train, control and release partitions of the configured dataset.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset,
    pub control: Dataset,
    pub release: Dataset,
}

pub fn prepare_splits(cfg: &ExperimentConfig) -> Result<Splits> {
    let data = cfg.dataset.load()?;
    let (train, control, release) = split(&data, cfg.split.fractions, cfg.split.seed)?;
    if train.is_empty() || control.is_empty() || release.is_empty() {
        return Err(Error::TooFewRows {
            needed: 3,
            have: data.n_rows(),
        });
    }
    Ok(Splits {
        train,
        control,
        release,
    })
}

fn cell_seed(cfg: &ExperimentConfig, model: &str, level: f64) -> u64 {
    derive_seed(cfg.seed, &[tag(model), level.to_bits()])
}

fn seed_key(model: &str, level: f64) -> String {
    format!("cell/{model}/{level}")
}

/// Per-model state shared by all levels.
enum Generator<'a> {
    Leaky,
    Overfit(LossOptimum),
    Dp { bins: usize },
    External(&'a [super::config::ExternalRelease]),
}

impl<'a> Generator<'a> {
    fn prepare(model: &'a RiskModel, train: &Dataset, release: &Dataset) -> Result<Self> {
        Ok(match model {
            RiskModel::Leaky { .. } => Generator::Leaky,
            RiskModel::Overfit { .. } => Generator::Overfit(LossOptimum::find(train, release)?),
            RiskModel::Dp { bins, .. } => Generator::Dp { bins: *bins },
            RiskModel::External { files } => Generator::External(files),
        })
    }

    fn generate(&self, level: f64, train: &Dataset, release: &Dataset, seed: u64) -> Result<Dataset> {
        let n = train.n_rows();
        match self {
            Generator::Leaky => leaky_release(train, release, level, seed),
            Generator::Overfit(opt) => Ok(opt.target(level)?.model.sample(n, seed)),
            Generator::Dp { bins } => {
                let fit_seed = derive_seed(seed, &[tag("dp-fit")]);
                Ok(fit_dp_marginal(train, level, *bins, fit_seed)?.sample(n, seed))
            }
            Generator::External(files) => {
                let f = files
                    .iter()
                    .find(|f| f.value == level)
                    .ok_or_else(|| Error::param(format!("no external release for value {level}")))?;
                load_external_synth(&f.path, train.schema())
            }
        }
    }
}

/// Inputs of one metric evaluation.
pub struct CellData<'a> {
    pub synth: &'a Dataset,
    pub train: &'a Dataset,
    pub control: &'a Dataset,
    /// Population sample disjoint from train and control.
    pub reference: &'a Dataset,
}

/// A metric value with its control counterpart and bootstrap summary.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub control: Option<f64>,
    pub bootstrap: Option<BootstrapSummary>,
    pub runtime_seconds: f64,
}

type Resampler<'a> = Box<dyn Fn(&[usize]) -> Result<f64> + Sync + 'a>;

struct Raw<'a> {
    value: f64,
    control: Option<f64>,
    n: usize,
    resample: Option<Resampler<'a>>,
}

fn inference_raw<'a>(r: AttributeInference) -> Raw<'a> {
    let n = r.train_guesses.truth.len();
    let value = r.train.value();
    let control = Some(r.control.value());
    Raw {
        value,
        control,
        n,
        resample: Some(Box::new(move |idx| Ok(r.scorer.score_subset(&r.train_guesses, idx)?.value()))),
    }
}

fn gtcap_raw<'a>(d: &CellData<'_>, aux: &AuxSpec, radius: f64) -> Result<Raw<'a>> {
    let a = aux.resolve(d.train.schema())?;
    let rows = gtcap_rows(d.synth, d.train, &a.keys, a.target, radius)?;
    let control = mean_defined(&gtcap_rows(d.synth, d.control, &a.keys, a.target, radius)?);
    Ok(Raw {
        value: mean_defined(&rows),
        control: Some(control),
        n: rows.len(),
        resample: Some(Box::new(move |idx| {
            let picked: Vec<Option<f64>> = idx.iter().map(|&i| rows[i]).collect();
            Ok(mean_defined(&picked))
        })),
    })
}

fn dcr_raw<'a>(d: &CellData<'_>, icfg: &IndicatorConfig) -> Result<Raw<'a>> {
    let comp = dcr_components(d.synth, d.train, icfg)?;
    let control = dcr_components(d.synth, d.control, icfg)?.score().value;
    Ok(Raw {
        value: comp.score().value,
        control: Some(control),
        n: comp.srd.len(),
        resample: Some(Box::new(move |idx| Ok(comp.score_subset(idx).value))),
    })
}

fn sample_rows(data: &Dataset, n: usize, seed: u64) -> Dataset {
    let n = n.min(data.n_rows());
    let mut idx = index::sample(&mut rng::rng(seed), data.n_rows(), n).into_vec();
    idx.sort_unstable();
    data.subset(&idx)
}

fn raw_metric<'a>(metric: Metric, cfg: &ExperimentConfig, d: &CellData<'_>, seed: u64) -> Result<Raw<'a>> {
    let conf = cfg.attack.confidence;
    let n_attacks = cfg.attack.n_attacks;
    Ok(match metric {
        Metric::Ims => {
            let matches = ims_matches(d.train, d.synth)?;
            let control = rate_of(&ims_matches(d.control, d.synth)?, &(0..d.synth.n_rows()).collect::<Vec<_>>());
            let all: Vec<usize> = (0..matches.len()).collect();
            Raw {
                value: rate_of(&matches, &all),
                control: Some(control),
                n: matches.len(),
                resample: Some(Box::new(move |idx| Ok(rate_of(&matches, idx)))),
            }
        }
        Metric::Dcr => dcr_raw(d, &IndicatorConfig { k: 1, ..cfg.indicator.clone() })?,
        Metric::Knn => dcr_raw(d, &cfg.indicator)?,
        Metric::SinglingOut => {
            let acfg = AttackConfig { seed, ..cfg.attack.clone() };
            let r = singling_out_mia(d.synth, d.train, d.control, &acfg)?;
            let outcomes = r.passes[r.best_pass].train_outcomes.clone();
            Raw {
                value: r.train.rate,
                control: Some(r.control.rate),
                n: outcomes.len(),
                resample: (!outcomes.is_empty()).then(|| -> Resampler<'a> { Box::new(move |idx| Ok(rate_of(&outcomes, idx))) }),
            }
        }
        Metric::Domias => {
            let members = sample_rows(d.train, n_attacks, derive_seed(seed, &[tag("members")]));
            let nonmembers = sample_rows(d.control, members.n_rows(), derive_seed(seed, &[tag("nonmembers")]));
            let r = domias_mia(d.synth, d.reference, &members, &nonmembers, cfg.domias_bandwidth)?;
            let (pos, neg) = (r.member_scores, r.nonmember_scores);
            Raw {
                value: r.score,
                control: None,
                n: pos.len().min(neg.len()),
                resample: Some(Box::new(move |idx| {
                    let p: Vec<f64> = idx.iter().map(|&i| pos[i]).collect();
                    let q: Vec<f64> = idx.iter().map(|&i| neg[i]).collect();
                    Ok(2.0 * stats::roc_auc(&p, &q) - 1.0)
                })),
            }
        }
        Metric::Linkability => {
            let (a1, a2) = default_partition(d.synth.n_attributes());
            let r = linkability_attack(d.synth, d.train, d.control, (&a1, &a2), cfg.attack.k_link, n_attacks, seed)?;
            let outcomes = r.train_outcomes;
            Raw {
                value: r.train.rate,
                control: Some(r.control.rate),
                n: outcomes.len(),
                resample: Some(Box::new(move |idx| Ok(rate_of(&outcomes, idx)))),
            }
        }
        Metric::AiaDistance => {
            let aux = cfg.aia.aux.resolve(d.train.schema())?;
            inference_raw(aia_distance(d.synth, d.train, d.control, &aux, cfg.aia.numeric, n_attacks, conf, seed)?)
        }
        Metric::AiaMl => {
            let aux = cfg.aia.aux.resolve(d.train.schema())?;
            inference_raw(aia_ml(d.synth, d.train, d.control, &aux, &cfg.aia.learner, n_attacks, conf, seed)?)
        }
        Metric::Gtcap => gtcap_raw(d, &cfg.gtcap.aux, cfg.gtcap.radius)?,
    })
}

fn finish(raw: Raw<'_>, runtime_seconds: f64, n_resamples: usize, confidence: f64, seed: u64) -> Result<Evaluation> {
    let bootstrap = match (&raw.resample, n_resamples) {
        (Some(f), n) if n >= 2 && raw.n > 0 => Some(bootstrap_indices(raw.n, f, n, confidence, seed)?),
        _ => None,
    };
    Ok(Evaluation {
        value: raw.value,
        control: raw.control,
        bootstrap,
        runtime_seconds,
    })
}

/// Evaluates one metric with its control counterpart; the bootstrap
/// resamples the per-target outcomes (or synthetic rows) of the evaluation.
pub fn evaluate_metric(metric: Metric, cfg: &ExperimentConfig, d: &CellData<'_>, seed: u64) -> Result<Evaluation> {
    let start = Instant::now();
    let raw = raw_metric(metric, cfg, d, seed)?;
    let runtime = start.elapsed().as_secs_f64();
    let n_resamples = if metric.is_heavy() {
        cfg.bootstrap.n_resamples_heavy
    } else {
        cfg.bootstrap.n_resamples
    };
    finish(raw, runtime, n_resamples, cfg.bootstrap.confidence, derive_seed(seed, &[tag("bootstrap")]))
}

struct CellKey<'a> {
    stage: &'a str,
    model: &'a str,
    level: f64,
    outlier_fraction: f64,
}

impl CellKey<'_> {
    fn row(&self, metric: &str) -> ResultRow {
        ResultRow {
            stage: self.stage.to_string(),
            risk_model: self.model.to_string(),
            risk_value: self.level,
            outlier_fraction: self.outlier_fraction,
            metric: metric.to_string(),
            value: None,
            ci_low: None,
            ci_high: None,
            stdev: None,
            runtime_seconds: 0.0,
            control_adjusted: false,
            error: None,
        }
    }

    fn failed(&self, metric: &str, e: &Error) -> ResultRow {
        ResultRow {
            error: Some(e.to_string()),
            ..self.row(metric)
        }
    }

    fn rows_for(&self, name: &str, ev: Result<Evaluation>, adjust: bool) -> Vec<ResultRow> {
        let ev = match ev {
            Ok(ev) => ev,
            Err(e) => return vec![self.failed(name, &e)],
        };
        let mut row = ResultRow {
            value: Some(ev.value),
            runtime_seconds: ev.runtime_seconds,
            ..self.row(name)
        };
        if let Some(b) = ev.bootstrap {
            // percentile limits can miss a point estimate at a skewed boundary
            row.ci_low = Some(b.ci_low.min(ev.value));
            row.ci_high = Some(b.ci_high.max(ev.value));
            row.stdev = Some(b.stdev);
        }
        let mut out = vec![row];
        if let (true, Some(c)) = (adjust, ev.control) {
            let adjusted = ResultRow {
                control_adjusted: true,
                runtime_seconds: ev.runtime_seconds,
                ..self.row(name)
            };
            out.push(match control_adjusted(ev.value, c, 1.0) {
                Ok(v) => ResultRow { value: Some(v), ..adjusted },
                Err(e) => ResultRow {
                    error: Some(e.to_string()),
                    ..adjusted
                },
            });
        }
        out
    }
}

fn evaluate_cell(cfg: &ExperimentConfig, key: &CellKey<'_>, synth: Result<Dataset>, train: &Dataset, splits: &Splits, seed: u64) -> Vec<ResultRow> {
    let synth = match synth {
        Ok(s) => s,
        Err(e) => {
            let mut rows: Vec<ResultRow> = cfg.metrics.iter().map(|m| key.failed(m.name(), &e)).collect();
            if cfg.utility {
                rows.push(key.failed(UTILITY_METRIC, &e));
            }
            return rows;
        }
    };
    let d = CellData {
        synth: &synth,
        train,
        control: &splits.control,
        reference: &splits.release,
    };
    let mut rows = Vec::new();
    for &m in &cfg.metrics {
        let ev = evaluate_metric(m, cfg, &d, derive_seed(seed, &[tag(m.name())]));
        rows.extend(key.rows_for(m.name(), ev, cfg.control_adjusted));
    }
    if cfg.utility {
        let start = Instant::now();
        let u = mle_utility(train, &synth, &cfg.utility_learner, derive_seed(seed, &[tag(UTILITY_METRIC)]));
        let runtime = start.elapsed().as_secs_f64();
        rows.push(match u {
            Ok(v) => ResultRow {
                value: Some(v),
                runtime_seconds: runtime,
                ..key.row(UTILITY_METRIC)
            },
            Err(e) => key.failed(UTILITY_METRIC, &e),
        });
    }
    rows
}

fn with_pool<T: Send>(cfg: &ExperimentConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    match cfg.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Other(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn base_seeds(cfg: &ExperimentConfig) -> BTreeMap<String, u64> {
    let mut seeds = BTreeMap::new();
    seeds.insert("master".to_string(), cfg.seed);
    seeds.insert("split".to_string(), cfg.split.seed);
    seeds.insert("indicator_partition".to_string(), cfg.indicator.seed);
    if let super::config::DatasetSource::MiniAdult { seed, .. } = cfg.dataset {
        seeds.insert("dataset".to_string(), seed);
    }
    seeds
}

/// Evaluates every configured metric on every level of every risk model.
/// Cells run in parallel; each draws its randomness from a seed derived
/// from the master seed, the model and the level.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let splits = prepare_splits(cfg)?;
    run_experiment_on(cfg, &splits)
}

pub fn run_experiment_on(cfg: &ExperimentConfig, splits: &Splits) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut seeds = base_seeds(cfg);
    let rows = with_pool(cfg, || {
        cfg.risk_models
            .par_iter()
            .flat_map_iter(|model| {
                let name = model.name();
                let levels = model.levels();
                let generator = Generator::prepare(model, &splits.train, &splits.release);
                let cells: Vec<Vec<ResultRow>> = levels
                    .par_iter()
                    .map(|&level| {
                        let key = CellKey {
                            stage: STAGE_GRID,
                            model: name,
                            level,
                            outlier_fraction: 0.0,
                        };
                        let seed = cell_seed(cfg, name, level);
                        let synth = match &generator {
                            Ok(g) => g.generate(level, &splits.train, &splits.release, derive_seed(seed, &[tag("synth")])),
                            Err(e) => Err(Error::Other(format!("generator setup failed: {e}"))),
                        };
                        evaluate_cell(cfg, &key, synth, &splits.train, splits, seed)
                    })
                    .collect();
                cells.into_iter().flatten()
            })
            .collect::<Vec<_>>()
    })?;
    for model in &cfg.risk_models {
        for level in model.levels() {
            seeds.insert(seed_key(model.name(), level), cell_seed(cfg, model.name(), level));
        }
    }
    let mut report = ExperimentReport {
        rows,
        correlations: BTreeMap::new(),
        seeds,
    };
    for model in &cfg.risk_models {
        if let Some(m) = grid_correlations(&report, model.name()) {
            report.correlations.insert(model.name().to_string(), m);
        }
    }
    Ok(report)
}

/// Pearson correlations among the metrics that produced a value at every
/// level of the model's grid.
pub fn grid_correlations(report: &ExperimentReport, model: &str) -> Option<CorrelationMatrix> {
    let mut names: Vec<&str> = report
        .rows
        .iter()
        .filter(|r| r.stage == STAGE_GRID && r.risk_model == model && !r.control_adjusted)
        .map(|r| r.metric.as_str())
        .collect();
    names.sort_unstable();
    names.dedup();
    let series: BTreeMap<String, Vec<f64>> = names
        .into_iter()
        .filter_map(|m| {
            let s = report.series(STAGE_GRID, model, m);
            s.iter().map(|(_, v)| *v).collect::<Option<Vec<f64>>>().map(|v| (m.to_string(), v))
        })
        .collect();
    if series.is_empty() {
        return None;
    }
    correlation_matrix(&series).ok()
}

/// Removes each fraction of LOF outliers from the training set, refits the
/// overfit model at every `f_o` and evaluates all metrics against the
/// reduced training set. Fraction 0 reproduces the overfit grid cells.
pub fn outlier_robustness_protocol(cfg: &ExperimentConfig, fractions: &[f64], f_o_levels: &[f64]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let splits = prepare_splits(cfg)?;
    outlier_robustness_on(cfg, &splits, fractions, f_o_levels)
}

pub fn outlier_robustness_on(cfg: &ExperimentConfig, splits: &Splits, fractions: &[f64], f_o_levels: &[f64]) -> Result<ExperimentReport> {
    if fractions.is_empty() || f_o_levels.is_empty() {
        return Err(Error::param("outlier protocol grid is empty"));
    }
    let name = "overfit";
    let rows = with_pool(cfg, || {
        fractions
            .par_iter()
            .flat_map_iter(|&fraction| {
                let train = if fraction == 0.0 {
                    Ok(splits.train.clone())
                } else {
                    remove_outliers_lof(&splits.train, fraction, cfg.outliers.k_lof).map(|(kept, _)| kept)
                };
                let opt = train.and_then(|t| Ok((LossOptimum::find(&t, &splits.release)?, t)));
                let cells: Vec<Vec<ResultRow>> = f_o_levels
                    .par_iter()
                    .map(|&f_o| {
                        let key = CellKey {
                            stage: STAGE_OUTLIERS,
                            model: name,
                            level: f_o,
                            outlier_fraction: fraction,
                        };
                        let seed = cell_seed(cfg, name, f_o);
                        match &opt {
                            Ok((opt, train)) => {
                                let synth = opt
                                    .target(f_o)
                                    .map(|m| m.model.sample(train.n_rows(), derive_seed(seed, &[tag("synth")])));
                                evaluate_cell(cfg, &key, synth, train, splits, seed)
                            }
                            Err(e) => evaluate_cell(cfg, &key, Err(Error::Other(e.to_string())), &splits.train, splits, seed),
                        }
                    })
                    .collect();
                cells.into_iter().flatten()
            })
            .collect::<Vec<_>>()
    })?;
    let mut seeds = base_seeds(cfg);
    for &f_o in f_o_levels {
        seeds.insert(seed_key(name, f_o), cell_seed(cfg, name, f_o));
    }
    Ok(ExperimentReport {
        rows,
        correlations: BTreeMap::new(),
        seeds,
    })
}

pub fn knn_sweep_name(k: usize) -> String {
    format!("knn_k{k}")
}

pub fn radius_sweep_name(r: f64) -> String {
    format!("gtcap_r{r}")
}

/// k-NN indicator per `k` and GTCAP per radius on every grid release.
pub fn parameter_sweeps(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let splits = prepare_splits(cfg)?;
    parameter_sweeps_on(cfg, &splits)
}

pub fn parameter_sweeps_on(cfg: &ExperimentConfig, splits: &Splits) -> Result<ExperimentReport> {
    let s = &cfg.sweeps;
    if s.k_values.is_empty() || s.radii.is_empty() {
        return Err(Error::param("sweep lists are empty"));
    }
    let aux = s.gtcap_aux.clone().unwrap_or_else(|| cfg.gtcap.aux.clone());
    let rows = with_pool(cfg, || {
        cfg.risk_models
            .par_iter()
            .flat_map_iter(|model| {
                let name = model.name();
                let generator = Generator::prepare(model, &splits.train, &splits.release);
                let cells: Vec<Vec<ResultRow>> = model
                    .levels()
                    .par_iter()
                    .map(|&level| {
                        let key = CellKey {
                            stage: STAGE_SWEEP,
                            model: name,
                            level,
                            outlier_fraction: 0.0,
                        };
                        let seed = cell_seed(cfg, name, level);
                        let synth = match &generator {
                            Ok(g) => g.generate(level, &splits.train, &splits.release, derive_seed(seed, &[tag("synth")])),
                            Err(e) => Err(Error::Other(format!("generator setup failed: {e}"))),
                        };
                        sweep_cell(cfg, &key, synth, splits, &aux, seed)
                    })
                    .collect();
                cells.into_iter().flatten()
            })
            .collect::<Vec<_>>()
    })?;
    let mut seeds = base_seeds(cfg);
    for model in &cfg.risk_models {
        for level in model.levels() {
            seeds.insert(seed_key(model.name(), level), cell_seed(cfg, model.name(), level));
        }
    }
    Ok(ExperimentReport {
        rows,
        correlations: BTreeMap::new(),
        seeds,
    })
}

fn sweep_cell(cfg: &ExperimentConfig, key: &CellKey<'_>, synth: Result<Dataset>, splits: &Splits, aux: &AuxSpec, seed: u64) -> Vec<ResultRow> {
    let s = &cfg.sweeps;
    let names: Vec<String> = s
        .k_values
        .iter()
        .map(|&k| knn_sweep_name(k))
        .chain(s.radii.iter().map(|&r| radius_sweep_name(r)))
        .collect();
    let synth = match synth {
        Ok(s) => s,
        Err(e) => return names.iter().map(|n| key.failed(n, &e)).collect(),
    };
    let d = CellData {
        synth: &synth,
        train: &splits.train,
        control: &splits.control,
        reference: &splits.release,
    };
    let conf = cfg.bootstrap.confidence;
    let boot_seed = |name: &str| derive_seed(seed, &[tag(name), tag("bootstrap")]);
    let mut rows = Vec::new();
    for &k in &s.k_values {
        let name = knn_sweep_name(k);
        let start = Instant::now();
        let raw = dcr_raw(&d, &IndicatorConfig { k, ..cfg.indicator.clone() });
        let runtime = start.elapsed().as_secs_f64();
        let ev = raw.and_then(|r| finish(r, runtime, cfg.bootstrap.n_resamples, conf, boot_seed(&name)));
        rows.extend(key.rows_for(&name, ev, false));
    }
    for &r in &s.radii {
        let name = radius_sweep_name(r);
        let start = Instant::now();
        let raw = gtcap_raw(&d, aux, r);
        let runtime = start.elapsed().as_secs_f64();
        let ev = raw.and_then(|raw| finish(raw, runtime, cfg.bootstrap.n_resamples_heavy, conf, boot_seed(&name)));
        rows.extend(key.rows_for(&name, ev, false));
    }
    rows
}

/// The grid, plus the outlier protocol and sweeps when enabled.
pub fn run_all(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let splits = prepare_splits(cfg)?;
    let mut report = run_experiment_on(cfg, &splits)?;
    if cfg.outliers.enabled {
        report.extend(outlier_robustness_on(cfg, &splits, &cfg.outliers.fractions, &cfg.outliers.f_o_levels)?);
    }
    if cfg.sweeps.enabled {
        report.extend(parameter_sweeps_on(cfg, &splits)?);
    }
    Ok(report)
}
