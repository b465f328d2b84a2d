//! Risk models that inject a known amount of privacy risk into a synthetic
//! release, and the synthesizers they drive.
//!
//! * leaky: a release containing a fraction `f_l` of the training rows;
//! * overfit: a kernel synthesizer whose validation loss is `f_o` times its
//!   optimum;
//! * DP: Laplace-noised independent marginals with budget `epsilon`.

mod dp;
mod external;
mod kernel;
mod leaky;
mod overfit;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use dp::{bin_of, fit_dp_marginal, laplace, noisy_histogram, DpMarginalSynth, NoisyMarginal, DEFAULT_BINS};
pub use external::load_external_synth;
pub use kernel::{fit_kernel_synth, KernelSynth, LOSS_RESOLUTION};
pub use leaky::{leaked_count, leaky_release};
pub use overfit::{
    fit_to_overfit_ratio, LossOptimum, OverfitModel, OverfitSummary, LOSS_TOLERANCE, MIN_BANDWIDTH,
    OPTIMUM_SEARCH,
};

use crate::error::Result;
use crate::tabular::Dataset;

fn default_bins() -> usize {
    DEFAULT_BINS
}

/// Serializable description of a generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthesizerSpec {
    KernelSmoother { bandwidth: f64 },
    DpMarginal {
        epsilon: f64,
        #[serde(default = "default_bins")]
        bins: usize,
    },
    ExternalCsv { path: PathBuf },
}

impl SynthesizerSpec {
    /// Fits on `train` and draws `n` rows. External files are returned as
    /// loaded, whatever `n`.
    pub fn generate(&self, train: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
        match self {
            SynthesizerSpec::KernelSmoother { bandwidth } => Ok(fit_kernel_synth(train, *bandwidth)?.sample(n, seed)),
            SynthesizerSpec::DpMarginal { epsilon, bins } => {
                let fit_seed = crate::rng::derive_seed(seed, &[crate::rng::tag("dp-fit")]);
                Ok(fit_dp_marginal(train, *epsilon, *bins, fit_seed)?.sample(n, seed))
            }
            SynthesizerSpec::ExternalCsv { path } => load_external_synth(path, train.schema()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_shape() {
        let s: SynthesizerSpec = serde_json::from_str(r#"{"kind":"dp_marginal","epsilon":5.0}"#).unwrap();
        assert_eq!(s, SynthesizerSpec::DpMarginal { epsilon: 5.0, bins: 16 });
        let k = serde_json::to_string(&SynthesizerSpec::KernelSmoother { bandwidth: 0.1 }).unwrap();
        assert_eq!(k, r#"{"kind":"kernel_smoother","bandwidth":0.1}"#);
    }
}
