use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::prior::EmpiricalPrior;
use crate::rng;

/// One draw of `Y = X + σ√U·V`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardSample {
    pub clean_index: usize,
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
    pub u: f64,
    pub v: Vec<f64>,
}

/// Corrupts `clean` with scale `sigma ≥ 0`; `sigma = 0` returns it unchanged.
/// Returns `(noisy, u, v)`.
pub fn corrupt_point(clean: &[f64], sigma: f64, rng: &mut rng::Rng) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("sigma", format!("must be finite and >= 0, got {sigma}")));
    }
    let u: f64 = Exp1.sample(rng);
    let v: Vec<f64> = (0..clean.len()).map(|_| StandardNormal.sample(rng)).collect();
    let scale = sigma * u.sqrt();
    let noisy = clean.iter().zip(&v).map(|(x, vi)| x + scale * vi).collect();
    Ok((noisy, u, v))
}

/// `count` bootstrap draws from the prior, each corrupted independently.
/// Draw `i` uses stream `i` of `config.seed`.
pub fn forward_corrupt(prior: &EmpiricalPrior, config: &ModelConfig, count: usize, exec: Exec) -> Result<Vec<ForwardSample>> {
    config.validate()?;
    if count == 0 {
        return Err(Error::invalid("count", "must be >= 1"));
    }
    prior.check_point(&vec![0.0; config.dim()])?;
    let sigma = config.kernel.sigma();
    par::try_map_indexed(exec, count, |i| {
        let mut rng = rng::stream(config.seed, i as u64);
        let clean_index = rng.random_range(0..prior.len());
        let clean = prior.atom(clean_index).to_vec();
        let (noisy, u, v) = corrupt_point(&clean, sigma, &mut rng)?;
        Ok(ForwardSample {
            clean_index,
            clean,
            noisy,
            u,
            v,
        })
    })
}
