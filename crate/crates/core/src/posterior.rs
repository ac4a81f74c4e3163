//! Closed-form posterior over prior atoms given an observation `y`:
//! `P(X₀ = xᵢ | Y = y) ∝ G(xᵢ, y)`, plus the concentration certificates
//! built on it.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dynamics::log_sum_exp;
use crate::error::{Error, Result};
use crate::kernel::{distance, KernelParams};
use crate::prior::EmpiricalPrior;
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorWeights {
    log_weights: Vec<f64>,
    observation: Vec<f64>,
    kernel: KernelParams,
}

impl PosteriorWeights {
    /// Normalised: `logsumexp = 0`.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn observation(&self) -> &[f64] {
        &self.observation
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// Most probable atom, lowest index on ties.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.log_weights.iter().enumerate() {
            if l > self.log_weights[best] {
                best = i;
            }
        }
        best
    }
}

/// `log wᵢ = log G(xᵢ, y) − logsumexp_j log G(x_j, y)`. An observation on an
/// atom (closer than the kernel's distance floor) yields a point mass there.
pub fn posterior_weights(prior: &EmpiricalPrior, kernel: &KernelParams, y: &[f64]) -> Result<PosteriorWeights> {
    if prior.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: prior.dim(),
        });
    }
    prior.check_point(y)?;
    let dists: Vec<f64> = prior.atoms().map(|a| distance(a, y)).collect();
    let log_weights = match dists.iter().position(|&r| r < kernel.distance_floor()) {
        Some(hit) => (0..dists.len())
            .map(|i| if i == hit { 0.0 } else { f64::NEG_INFINITY })
            .collect(),
        None => {
            let log_g = dists
                .iter()
                .map(|&r| kernel.log_green_radial(r))
                .collect::<Result<Vec<_>>>()?;
            let lse = log_sum_exp(&log_g);
            log_g.into_iter().map(|l| l - lse).collect()
        }
    };
    Ok(PosteriorWeights {
        log_weights,
        observation: y.to_vec(),
        kernel: *kernel,
    })
}

/// Inverse-CDF draws of atom indices.
pub fn posterior_sample(weights: &PosteriorWeights, count: usize, seed: u64) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights.weights() {
        acc += w;
        cdf.push(acc);
    }
    let mut r = rng::stream(seed, 0);
    (0..count)
        .map(|_| {
            let u = r.random::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u);
            // Never land on a zero-weight tail atom through rounding.
            let mut i = i.min(cdf.len() - 1);
            while i > 0 && weights.log_weights[i] == f64::NEG_INFINITY {
                i -= 1;
            }
            i
        })
        .collect()
}

fn masked_lse(weights: &PosteriorWeights, prior: &EmpiricalPrior, center: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    let sel: Vec<f64> = prior
        .atoms()
        .zip(&weights.log_weights)
        .filter(|(a, _)| keep(distance(a, center)))
        .map(|(_, &l)| l)
        .collect();
    log_sum_exp(&sel)
}

/// Posterior mass of atoms with `|xᵢ − center| ≤ radius`.
pub fn ball_mass(weights: &PosteriorWeights, prior: &EmpiricalPrior, center: &[f64], radius: f64) -> f64 {
    masked_lse(weights, prior, center, |r| r <= radius).exp().min(1.0)
}

/// Posterior mass outside the closed ball, summed directly rather than as
/// `1 − ball_mass` so that tiny values keep their precision.
pub fn off_ball_mass(weights: &PosteriorWeights, prior: &EmpiricalPrior, center: &[f64], radius: f64) -> f64 {
    masked_lse(weights, prior, center, |r| r > radius).exp().min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub d: usize,
    pub sigma: f64,
    #[serde(rename = "epsilon")]
    pub epsilon_used: f64,
    pub delta: f64,
    pub r: f64,
    #[serde(rename = "lhs")]
    pub lhs_mass: f64,
    #[serde(rename = "rhs")]
    pub rhs_bound: f64,
    pub margin: f64,
    pub off_mass: f64,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.margin >= -1e-12
    }
}

/// `1 − (1/ε)(1+δ)^{2−d}`, clamped below at 0.
pub fn concentration_bound(dim: usize, epsilon: f64, delta: f64) -> f64 {
    let log_term = (2.0 - dim as f64) * delta.ln_1p() - epsilon.ln();
    (1.0 - log_term.exp()).max(0.0)
}

/// Posterior mass of `B(y, (1+δ)r)` against the lower bound with `ε` set to
/// the exact empirical mass of `B(y, r)`.
pub fn concentration_certificate(
    prior: &EmpiricalPrior,
    kernel: &KernelParams,
    y: &[f64],
    r: f64,
    delta: f64,
) -> Result<Certificate> {
    if !(r >= 0.0) || !(delta >= 0.0) {
        return Err(Error::invalid("r/delta", "must be >= 0"));
    }
    let epsilon = prior.ball_fraction(y, r);
    if epsilon == 0.0 {
        return Err(Error::EmptyBall { radius: r });
    }
    let w = posterior_weights(prior, kernel, y)?;
    let outer = (1.0 + delta) * r;
    let lhs = ball_mass(&w, prior, y, outer);
    let rhs = concentration_bound(kernel.dim(), epsilon, delta);
    Ok(Certificate {
        d: kernel.dim(),
        sigma: kernel.sigma(),
        epsilon_used: epsilon,
        delta,
        r,
        lhs_mass: lhs,
        rhs_bound: rhs,
        margin: lhs - rhs,
        off_mass: off_ball_mass(&w, prior, y, outer),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DominationReport {
    pub green_ratio: f64,
    pub power_ratio: f64,
    pub holds: bool,
}

/// Compares the in-ball share of `Σ G(xᵢ, y)` with that of `Σ |xᵢ − y|^{2−d}`.
pub fn monotone_domination_check(
    prior: &EmpiricalPrior,
    kernel: &KernelParams,
    y: &[f64],
    radius: f64,
) -> Result<DominationReport> {
    prior.check_point(y)?;
    let d = kernel.dim() as f64;
    let dists: Vec<f64> = prior.atoms().map(|a| distance(a, y)).collect();
    if dists.iter().any(|&r| r < kernel.distance_floor()) {
        // Both measures collapse onto the coinciding atom, which is inside.
        return Ok(DominationReport {
            green_ratio: 1.0,
            power_ratio: 1.0,
            holds: true,
        });
    }
    let log_g = dists
        .iter()
        .map(|&r| kernel.log_green_radial(r))
        .collect::<Result<Vec<_>>>()?;
    let log_p: Vec<f64> = dists.iter().map(|r| (2.0 - d) * r.ln()).collect();
    let share = |logs: &[f64]| {
        let inside: Vec<f64> = logs
            .iter()
            .zip(&dists)
            .filter(|(_, &r)| r <= radius)
            .map(|(&l, _)| l)
            .collect();
        (log_sum_exp(&inside) - log_sum_exp(logs)).exp()
    };
    let green_ratio = share(&log_g);
    let power_ratio = share(&log_p);
    Ok(DominationReport {
        green_ratio,
        power_ratio,
        holds: green_ratio >= power_ratio - 1e-12,
    })
}
