use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::rng;

/// `X_τ` and `∫₀^τ X_t dt` along one simulated path stopped at `τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample {
    pub value: f64,
    pub integral: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpTimeReport {
    pub lambda: f64,
    pub samples: usize,
    pub lhs_mean: f64,
    pub lhs_se: f64,
    pub rhs_mean: f64,
    pub rhs_se: f64,
    /// `|lhs − rhs|` in combined standard errors.
    pub z_score: f64,
    pub agree: bool,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Monte Carlo check of `E X_τ = λ E ∫₀^τ X_t dt` for `τ ~ Exp(λ)` independent
/// of `X`. The two sides are estimated from disjoint sample sets so their
/// errors are independent; disagreement beyond 4 combined standard errors fails.
///
/// `sampler(rng, τ)` simulates one path up to `τ`.
pub fn exp_time_identity_check<S>(lambda: f64, samples: usize, seed: u64, exec: Exec, sampler: S) -> Result<ExpTimeReport>
where
    S: Fn(&mut rng::Rng, f64) -> PathSample + Sync + Send,
{
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be finite and > 0"));
    }
    if samples < 4 {
        return Err(Error::invalid("samples", "need at least 4"));
    }
    let clock = Exp::new(lambda).map_err(|e| Error::invalid("lambda", e.to_string()))?;
    let draws = par::map_indexed(exec, samples, |i| {
        let mut r = rng::stream(seed, i as u64);
        let tau = clock.sample(&mut r);
        sampler(&mut r, tau)
    });
    let half = samples / 2;
    let lhs: Vec<f64> = draws[..half].iter().map(|p| p.value).collect();
    let rhs: Vec<f64> = draws[half..].iter().map(|p| lambda * p.integral).collect();
    let (lhs_mean, lhs_se) = mean_se(&lhs);
    let (rhs_mean, rhs_se) = mean_se(&rhs);
    let combined = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
    let z_score = if combined > 0.0 {
        (lhs_mean - rhs_mean).abs() / combined
    } else if lhs_mean == rhs_mean {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(ExpTimeReport {
        lambda,
        samples,
        lhs_mean,
        lhs_se,
        rhs_mean,
        rhs_se,
        z_score,
        agree: z_score <= 4.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_cases() {
        let r = exp_time_identity_check(1.0, 20_000, 3, Exec::default(), |_, t| PathSample {
            value: t,
            integral: t * t / 2.0,
        })
        .unwrap();
        assert!(r.agree, "{r:?}");
        assert!((r.lhs_mean - 1.0).abs() < 0.05);

        let r = exp_time_identity_check(1.0, 100, 3, Exec::default(), |_, t| PathSample {
            value: 1.0,
            integral: t,
        })
        .unwrap();
        assert_eq!(r.lhs_mean, 1.0);
        assert!(r.agree);
    }

    #[test]
    fn rejects_wrong_identity() {
        let r = exp_time_identity_check(1.0, 20_000, 5, Exec::default(), |_, t| PathSample {
            value: t,
            integral: t * t,
        })
        .unwrap();
        assert!(!r.agree);
    }
}
