use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackConfig, AuxInfo, BandwidthRule, LearnerSpec, NumericScoring};
use crate::datasets;
use crate::error::{Error, Result};
use crate::indicators::IndicatorConfig;
use crate::tabular::{load_csv, Attribute, Dataset, Schema, SplitFractions, DEFAULT_K_LOF};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    MiniAdult {
        #[serde(default = "default_rows")]
        rows: usize,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        /// Optional attribute declarations; kinds are inferred otherwise.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<Vec<Attribute>>,
    },
}

fn default_rows() -> usize {
    2000
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::MiniAdult { rows, seed } => Ok(datasets::mini_adult(*rows, *seed)),
            DatasetSource::Csv { path, schema } => {
                let hints = schema.clone().map(Schema::hint).transpose()?;
                load_csv(path, hints.as_ref())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// `(train, control, release)`.
    pub fractions: SplitFractions,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            fractions: (0.3, 0.3, 0.4),
            seed: 0,
        }
    }
}

/// One synthetic release per level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskModel {
    Leaky {
        #[serde(default = "unit_grid")]
        levels: Vec<f64>,
    },
    Overfit {
        #[serde(default = "overfit_grid")]
        levels: Vec<f64>,
    },
    Dp {
        #[serde(default = "dp_grid")]
        levels: Vec<f64>,
        #[serde(default = "default_bins")]
        bins: usize,
    },
    /// Pre-generated releases; `value` labels the row in the report.
    External { files: Vec<ExternalRelease> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalRelease {
    pub value: f64,
    pub path: PathBuf,
}

pub fn unit_grid() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}

pub fn overfit_grid() -> Vec<f64> {
    vec![1.0, 1.2, 1.4, 1.6, 1.8, 2.0]
}

pub fn dp_grid() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
}

fn default_bins() -> usize {
    crate::risk::DEFAULT_BINS
}

impl RiskModel {
    pub fn name(&self) -> &'static str {
        match self {
            RiskModel::Leaky { .. } => "leaky",
            RiskModel::Overfit { .. } => "overfit",
            RiskModel::Dp { .. } => "dp",
            RiskModel::External { .. } => "external",
        }
    }

    pub fn levels(&self) -> Vec<f64> {
        match self {
            RiskModel::Leaky { levels } | RiskModel::Overfit { levels } | RiskModel::Dp { levels, .. } => {
                levels.clone()
            }
            RiskModel::External { files } => files.iter().map(|f| f.value).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let levels = self.levels();
        if levels.is_empty() {
            return Err(Error::param(format!("{} grid is empty", self.name())));
        }
        let ok = match self {
            RiskModel::Leaky { .. } => levels.iter().all(|l| (0.0..=1.0).contains(l)),
            RiskModel::Overfit { .. } => levels.iter().all(|l| *l >= 1.0 && l.is_finite()),
            RiskModel::Dp { bins, .. } => *bins > 0 && levels.iter().all(|l| *l >= 0.0 && l.is_finite()),
            RiskModel::External { .. } => levels.iter().all(|l| l.is_finite()),
        };
        if !ok {
            return Err(Error::param(format!("invalid {} levels {levels:?}", self.name())));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ims,
    Dcr,
    Knn,
    SinglingOut,
    Domias,
    Linkability,
    AiaDistance,
    AiaMl,
    Gtcap,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Ims,
        Metric::Dcr,
        Metric::Knn,
        Metric::SinglingOut,
        Metric::Domias,
        Metric::Linkability,
        Metric::AiaDistance,
        Metric::AiaMl,
        Metric::Gtcap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ims => "ims",
            Metric::Dcr => "dcr",
            Metric::Knn => "knn",
            Metric::SinglingOut => "singling_out",
            Metric::Domias => "domias",
            Metric::Linkability => "linkability",
            Metric::AiaDistance => "aia_distance",
            Metric::AiaMl => "aia_ml",
            Metric::Gtcap => "gtcap",
        }
    }

    /// Metrics whose bootstrap uses the reduced resample count.
    pub fn is_heavy(self) -> bool {
        matches!(self, Metric::SinglingOut | Metric::Domias | Metric::Gtcap)
    }
}

/// Known attributes and target of an inference attack, by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxSpec {
    pub target: String,
    /// All attributes except the target when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keys: Option<Vec<String>>,
}

impl AuxSpec {
    pub fn resolve(&self, schema: &Schema) -> Result<AuxInfo> {
        match &self.keys {
            Some(keys) => AuxInfo::from_names(schema, keys, &self.target),
            None => {
                let t = schema
                    .index_of(&self.target)
                    .ok_or_else(|| Error::param(format!("unknown target attribute {:?}", self.target)))?;
                AuxInfo::all_but(t, schema.len())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AiaConfig {
    pub aux: AuxSpec,
    pub numeric: NumericScoring,
    pub learner: LearnerSpec,
}

impl Default for AiaConfig {
    fn default() -> Self {
        AiaConfig {
            aux: AuxSpec {
                target: datasets::MINI_ADULT_TARGET.to_string(),
                keys: None,
            },
            numeric: NumericScoring::default(),
            learner: LearnerSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GtcapConfig {
    pub aux: AuxSpec,
    pub radius: f64,
}

impl Default for GtcapConfig {
    fn default() -> Self {
        GtcapConfig {
            aux: AuxSpec {
                target: datasets::MINI_ADULT_TARGET.to_string(),
                keys: Some(datasets::MINI_ADULT_GTCAP_KEYS.iter().map(|s| s.to_string()).collect()),
            },
            radius: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    /// Resamples for singling out, DOMIAS and GTCAP.
    pub n_resamples_heavy: usize,
    pub confidence: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_resamples: 1000,
            n_resamples_heavy: 10,
            confidence: 0.95,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutlierConfig {
    pub enabled: bool,
    pub fractions: Vec<f64>,
    pub f_o_levels: Vec<f64>,
    pub k_lof: usize,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        OutlierConfig {
            enabled: false,
            fractions: vec![0.0, 0.01, 0.02, 0.05, 0.10],
            f_o_levels: vec![1.0, 1.6],
            k_lof: DEFAULT_K_LOF,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub enabled: bool,
    pub k_values: Vec<usize>,
    pub radii: Vec<f64>,
    /// GTCAP attack used for the radius sweep; the main one when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gtcap_aux: Option<AuxSpec>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            enabled: false,
            k_values: vec![1, 2, 5, 10],
            radii: vec![0.05, 0.1, 0.2, 0.4],
            gtcap_aux: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub split: SplitConfig,
    pub risk_models: Vec<RiskModel>,
    pub metrics: Vec<Metric>,
    pub indicator: IndicatorConfig,
    pub attack: AttackConfig,
    pub aia: AiaConfig,
    pub gtcap: GtcapConfig,
    pub domias_bandwidth: BandwidthRule,
    pub bootstrap: BootstrapConfig,
    /// Emit control-adjusted rows for metrics with a control counterpart.
    pub control_adjusted: bool,
    pub utility: bool,
    pub utility_learner: LearnerSpec,
    pub outliers: OutlierConfig,
    pub sweeps: SweepConfig,
    /// Worker threads for grid cells; rayon's default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::MiniAdult {
                rows: default_rows(),
                seed: 0,
            },
            split: SplitConfig::default(),
            risk_models: vec![RiskModel::Leaky { levels: unit_grid() }],
            metrics: vec![Metric::Ims, Metric::Dcr],
            indicator: IndicatorConfig::default(),
            attack: AttackConfig::default(),
            aia: AiaConfig::default(),
            gtcap: GtcapConfig::default(),
            domias_bandwidth: BandwidthRule::default(),
            bootstrap: BootstrapConfig::default(),
            control_adjusted: true,
            utility: false,
            utility_learner: LearnerSpec::default(),
            outliers: OutlierConfig::default(),
            sweeps: SweepConfig::default(),
            workers: None,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::NoMetrics);
        }
        if self.risk_models.is_empty() {
            return Err(Error::param("no risk models configured"));
        }
        for r in &self.risk_models {
            r.validate()?;
        }
        self.attack.validate()?;
        if !(self.gtcap.radius > 0.0 && self.gtcap.radius < 1.0) {
            return Err(Error::param(format!("gtcap radius {} not in (0, 1)", self.gtcap.radius)));
        }
        let b = &self.bootstrap;
        if b.n_resamples == 1 || b.n_resamples_heavy == 1 {
            return Err(Error::param("bootstrap needs 0 (off) or at least 2 resamples"));
        }
        if !(b.confidence > 0.0 && b.confidence < 1.0) {
            return Err(Error::param(format!("confidence {} not in (0, 1)", b.confidence)));
        }
        let o = &self.outliers;
        if o.fractions.iter().any(|f| !(0.0..=0.5).contains(f)) {
            return Err(Error::param(format!("outlier fractions {:?} not in [0, 0.5]", o.fractions)));
        }
        if o.enabled && (o.fractions.is_empty() || o.f_o_levels.is_empty()) {
            return Err(Error::param("outlier protocol grid is empty"));
        }
        if o.f_o_levels.iter().any(|f| !(*f >= 1.0)) {
            return Err(Error::param(format!("overfit levels {:?} must be >= 1", o.f_o_levels)));
        }
        let s = &self.sweeps;
        if s.enabled && (s.k_values.is_empty() || s.radii.is_empty()) {
            return Err(Error::param("sweep lists are empty"));
        }
        if s.k_values.contains(&0) || s.radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::param("sweep k must be positive and radii in (0, 1)"));
        }
        if self.workers == Some(0) {
            return Err(Error::param("workers must be positive"));
        }
        Ok(())
    }
}
