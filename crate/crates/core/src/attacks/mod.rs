//! No-box attack simulations: singling out, DOMIAS membership inference,
//! linkability and attribute inference (distance, ML and GTCAP).
//!
//! Attacks that produce guesses report a [`RiskEstimate`] for the training
//! targets and for the control targets. The control estimate measures what
//! the synthetic data reveals about the population rather than about the
//! training records; see [`crate::baselines::control_adjusted`].

mod domias;
mod inference;
mod learner;
mod linkability;
mod singling_out;

use serde::{Deserialize, Serialize};

pub use domias::{domias_mia, BandwidthRule, DensityModel, DomiasResult};
pub use inference::{
    aia_distance, aia_distance_on, aia_ml, aia_ml_on, gtcap, gtcap_rows, nrmse, AttributeInference,
    AuxInfo, GuessSet, InferenceScore, NumericScoring, Scorer,
};
pub use learner::{LearnerSpec, Tree};
pub use linkability::{default_partition, link_outcomes, linkability_attack, LinkabilityResult};
pub(crate) use inference::mean_defined;
pub use singling_out::{
    singling_out_mia, Condition, GuessBatch, MIN_PASS_GUESSES, PassResult, Predicate, SinglingOutResult,
};

pub use crate::stats::{wilson_interval, RiskEstimate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Upper bound on guesses per pass.
    pub n_attacks: usize,
    /// Inclusive range of attribute-subset sizes for multivariate singling out.
    pub attr_count_range: (usize, usize),
    /// Neighbors per half in the linkability attack.
    pub k_link: usize,
    pub gtcap_radius: f64,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            n_attacks: 2000,
            attr_count_range: (3, 12),
            k_link: 1,
            gtcap_radius: 0.1,
            confidence: crate::stats::DEFAULT_CONFIDENCE,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let (lo, hi) = self.attr_count_range;
        if lo == 0 || lo > hi {
            return Err(crate::Error::param(format!(
                "attribute count range ({lo}, {hi}) is empty"
            )));
        }
        if !(self.gtcap_radius > 0.0 && self.gtcap_radius < 1.0) {
            return Err(crate::Error::param(format!(
                "radius {} not in (0, 1)",
                self.gtcap_radius
            )));
        }
        if self.n_attacks == 0 {
            return Err(crate::Error::param("n_attacks must be positive"));
        }
        Ok(())
    }
}

/// JSON record emitted for one attack run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub attack: String,
    pub params: serde_json::Value,
    pub r: f64,
    pub delta_r: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_delta_r: Option<f64>,
}

impl AttackRecord {
    pub fn from_estimates(
        attack: &str,
        params: serde_json::Value,
        train: &RiskEstimate,
        control: Option<&RiskEstimate>,
    ) -> Self {
        AttackRecord {
            attack: attack.to_string(),
            params,
            r: train.rate,
            delta_r: train.half_width,
            n: train.n,
            control_r: control.map(|c| c.rate),
            control_delta_r: control.map(|c| c.half_width),
        }
    }
}
