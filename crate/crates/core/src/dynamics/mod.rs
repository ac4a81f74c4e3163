//! Forward corruption `Y = X + σ√U·V` and the reverse diffusion
//! `dY = b(Y) ds + dW` that carries a noisy observation back onto the
//! support of the prior.

mod drift;
mod exptime;
mod forward;
mod sampler;

use serde::{Deserialize, Serialize};

pub use drift::{DriftEval, DriftField, ExactDrift, LeadingOrderDrift, PerturbationMode, PerturbedDrift, ZeroDrift};
pub use exptime::{exp_time_identity_check, ExpTimeReport, PathSample};
pub use forward::{corrupt_point, forward_corrupt, ForwardSample};
pub use sampler::{reverse_sample, reverse_sample_batch, reverse_sample_with, State, StopReason, Trajectory};

pub(crate) use drift::log_sum_exp;

use crate::error::{Error, Result};
use crate::kernel::KernelParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kernel: KernelParams,
    /// `M`: stop once `∫|b|² ds ≥ M²`.
    pub stop_threshold: f64,
    pub max_steps: usize,
    pub dt_max: f64,
    /// `c` in `dt = min(dt_max, c/|b|²)`.
    pub dt_scale: f64,
    pub snap_radius: f64,
    pub seed: u64,
    /// Keep every `record_stride`-th state; 0 keeps only the start and the endpoint.
    pub record_stride: usize,
}

impl ModelConfig {
    /// Defaults: `M = 20d`, `dt_max = 10⁻³σ²`, `c = 0.1`, `snap_radius = 10⁻⁶σ`.
    pub fn new(kernel: KernelParams, seed: u64) -> Self {
        let sigma = kernel.sigma();
        Self {
            stop_threshold: 20.0 * kernel.dim() as f64,
            max_steps: 200_000,
            dt_max: 1e-3 * sigma * sigma,
            dt_scale: 0.1,
            snap_radius: 1e-6 * sigma,
            seed,
            record_stride: 1,
            kernel,
        }
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stop_threshold > 0.0) {
            return Err(Error::invalid("stop_threshold", "must be > 0"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be >= 1"));
        }
        if !(self.dt_max > 0.0) || !self.dt_max.is_finite() {
            return Err(Error::invalid("dt_max", "must be finite and > 0"));
        }
        if !(self.dt_scale > 0.0) || !self.dt_scale.is_finite() {
            return Err(Error::invalid("dt_scale", "must be finite and > 0"));
        }
        if !(self.snap_radius >= 0.0) {
            return Err(Error::invalid("snap_radius", "must be >= 0"));
        }
        Ok(())
    }
}
