//! Deliberate overfitting: shrink the kernel bandwidth below its
//! validation-optimal value until the validation loss reaches `f_o` times
//! its optimum.

use serde::{Deserialize, Serialize};

use super::kernel::{fit_kernel_synth, KernelSynth};
use crate::error::{Error, Result};
use crate::tabular::Dataset;

pub const MIN_BANDWIDTH: f64 = 1e-6;
/// Search interval for the optimal bandwidth.
pub const OPTIMUM_SEARCH: (f64, f64) = (1e-4, 4.0);
/// Relative tolerance on `L / (f_o L*)`.
pub const LOSS_TOLERANCE: f64 = 1e-3;

/// Validation-loss optimum of the kernel synthesizer.
#[derive(Clone, Debug)]
pub struct LossOptimum {
    model: KernelSynth,
    val: Dataset,
    pub h_star: f64,
    pub l_star: f64,
}

#[derive(Clone, Debug)]
pub struct OverfitModel {
    pub model: KernelSynth,
    pub f_o: f64,
    pub h_star: f64,
    pub l_star: f64,
    /// Achieved validation loss.
    pub loss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverfitSummary {
    pub f_o: f64,
    pub bandwidth: f64,
    pub h_star: f64,
    pub l_star: f64,
    pub loss: f64,
}

impl OverfitModel {
    pub fn ratio(&self) -> f64 {
        self.loss / self.l_star
    }

    pub fn summary(&self) -> OverfitSummary {
        OverfitSummary {
            f_o: self.f_o,
            bandwidth: self.model.bandwidth(),
            h_star: self.h_star,
            l_star: self.l_star,
            loss: self.loss,
        }
    }
}

impl LossOptimum {
    /// Golden-section search over `ln h` on [`OPTIMUM_SEARCH`].
    pub fn find(train: &Dataset, val: &Dataset) -> Result<Self> {
        let model = fit_kernel_synth(train, 1.0)?;
        let loss = |log_h: f64| -> Result<f64> { model.with_bandwidth(log_h.exp())?.validation_loss(val) };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (OPTIMUM_SEARCH.0.ln(), OPTIMUM_SEARCH.1.ln());
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (loss(c)?, loss(d)?);
        while b - a > 1e-3 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = loss(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = loss(d)?;
            }
        }
        let (log_h, l) = if fc < fd { (c, fc) } else { (d, fd) };
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param(format!("validation loss optimum {l} is not positive")));
        }
        Ok(LossOptimum {
            h_star: log_h.exp(),
            l_star: l,
            model: model.with_bandwidth(log_h.exp())?,
            val: val.clone(),
        })
    }

    pub fn loss_at(&self, h: f64) -> Result<f64> {
        self.model.with_bandwidth(h)?.validation_loss(&self.val)
    }

    /// Bisection on `ln h` in `[MIN_BANDWIDTH, h*]` for `L(h) = f_o L*`.
    pub fn target(&self, f_o: f64) -> Result<OverfitModel> {
        if !(f_o >= 1.0) {
            return Err(Error::param(format!("overfit ratio {f_o} must be >= 1")));
        }
        let goal = f_o * self.l_star;
        let done = |l: f64| (l - goal).abs() / self.l_star <= LOSS_TOLERANCE;
        let build = |h: f64, loss: f64| -> Result<OverfitModel> {
            Ok(OverfitModel {
                model: self.model.with_bandwidth(h)?,
                f_o,
                h_star: self.h_star,
                l_star: self.l_star,
                loss,
            })
        };
        if done(self.l_star) {
            return build(self.h_star, self.l_star);
        }
        let l_min_h = self.loss_at(MIN_BANDWIDTH)?;
        if l_min_h < goal {
            return Err(Error::OverfitUnreachable {
                requested: f_o,
                achieved: l_min_h / self.l_star,
            });
        }
        // loss decreases from l_min_h at lo to L* at hi
        let (mut lo, mut hi) = (MIN_BANDWIDTH.ln(), self.h_star.ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let l = self.loss_at(mid.exp())?;
            if done(l) {
                return build(mid.exp(), l);
            }
            if l > goal {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let l = self.loss_at(hi.exp())?;
        Err(Error::OverfitUnreachable {
            requested: f_o,
            achieved: l / self.l_star,
        })
    }
}

/// Kernel synthesizer fitted on `train` whose validation loss on `val` is
/// `f_o` times the optimal one.
pub fn fit_to_overfit_ratio(train: &Dataset, val: &Dataset, f_o: f64) -> Result<OverfitModel> {
    LossOptimum::find(train, val)?.target(f_o)
}
