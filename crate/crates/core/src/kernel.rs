//! Green kernel of Brownian motion killed at rate `1/σ²`:
//!
//! ```text
//! G(x, y) = (2π)^{-d/2} (2/σ²) (κ/|x−y|)^ν K_ν(κ|x−y|),   κ = √2/σ, ν = (d−2)/2.
//! ```
//!
//! All quantities are exposed in the log domain. At `d = 200` kernel values
//! across atoms span hundreds of orders of magnitude, so callers combine
//! them with log-sum-exp.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun;

/// Default floor on `|x − y|` below which the kernel reports a singularity.
pub const DEFAULT_DISTANCE_FLOOR: f64 = 1.0e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    dim: usize,
    sigma: f64,
    order: f64,
    kappa: f64,
    distance_floor: f64,
}

impl KernelParams {
    pub fn new(dim: usize, sigma: f64) -> Result<Self> {
        if dim < 3 {
            return Err(Error::invalid("dim", format!("points are polar only for d >= 3, got {dim}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        Ok(Self {
            dim,
            sigma,
            order: (dim as f64 - 2.0) / 2.0,
            kappa: std::f64::consts::SQRT_2 / sigma,
            distance_floor: DEFAULT_DISTANCE_FLOOR,
        })
    }

    pub fn with_distance_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::invalid("distance_floor", "must be > 0"));
        }
        self.distance_floor = floor;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `ν = (d − 2)/2`.
    pub fn order(&self) -> f64 {
        self.order
    }

    /// `κ = √2/σ`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn distance_floor(&self) -> f64 {
        self.distance_floor
    }

    /// `−(d/2) log 2π + log(2/σ²)`, the part of `log G` independent of `|x−y|`.
    fn log_prefactor(&self) -> f64 {
        -(self.dim as f64 / 2.0) * (2.0 * std::f64::consts::PI).ln() + (2.0 / (self.sigma * self.sigma)).ln()
    }

    fn check_distance(&self, r: f64) -> Result<()> {
        if r < self.distance_floor {
            return Err(Error::Singularity {
                distance: r,
                floor: self.distance_floor,
            });
        }
        Ok(())
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        for p in [x, y] {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: p.len(),
                });
            }
        }
        Ok(())
    }

    /// `log G` as a function of the distance `r = |x − y|`.
    pub fn log_green_radial(&self, r: f64) -> Result<f64> {
        self.check_distance(r)?;
        let z = self.kappa * r;
        let log_k = specfun::log_bessel_k(self.order, z)?;
        Ok(self.log_prefactor() + self.order * (self.kappa / r).ln() + log_k)
    }

    /// Magnitude of `∇₂ log G` at distance `r`: `κ K_{ν+1}(κr)/K_ν(κr)`.
    pub fn grad_log_green_radial(&self, r: f64) -> Result<f64> {
        self.check_distance(r)?;
        Ok(self.kappa * specfun::bessel_k_ratio(self.order, self.kappa * r)?)
    }

    /// `(log G, |∇₂ log G|)` at distance `r` from a single Bessel pass.
    pub fn radial_eval(&self, r: f64) -> Result<(f64, f64)> {
        self.check_distance(r)?;
        let e = specfun::bessel_k(self.order, self.kappa * r)?;
        let log_g = self.log_prefactor() + self.order * (self.kappa / r).ln() + e.log_k;
        Ok((log_g, self.kappa * e.ratio_up))
    }

    /// Leading-order `log G` at distance `r`:
    /// `−½ log(2πν) + ν log(ν/(πe)) − 2ν log r − 2 log σ`.
    pub fn log_green_leading_order_radial(&self, r: f64) -> Result<f64> {
        self.check_distance(r)?;
        let nu = self.order;
        Ok(-0.5 * (2.0 * std::f64::consts::PI * nu).ln()
            + nu * (nu / (std::f64::consts::PI * std::f64::consts::E)).ln()
            - 2.0 * nu * r.ln()
            - 2.0 * self.sigma.ln())
    }
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `log G_{σ²}(x, y)`.
pub fn log_green(params: &KernelParams, x: &[f64], y: &[f64]) -> Result<f64> {
    params.check_dims(x, y)?;
    params.log_green_radial(distance(x, y))
}

/// `∇_y log G_{σ²}(x, y) = −κ · (y−x)/|y−x| · K_{ν+1}/K_ν(κ|x−y|)`.
pub fn grad2_log_green(params: &KernelParams, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    params.check_dims(x, y)?;
    let r = distance(x, y);
    let mag = params.grad_log_green_radial(r)?;
    Ok(x.iter().zip(y).map(|(a, b)| mag * (a - b) / r).collect())
}

/// Leading-order large-`d` surrogate of [`log_green`]. Diagnostic only; at
/// small `d` (e.g. 10) it differs visibly from the exact kernel.
pub fn log_green_leading_order(params: &KernelParams, x: &[f64], y: &[f64]) -> Result<f64> {
    params.check_dims(x, y)?;
    params.log_green_leading_order_radial(distance(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(KernelParams::new(2, 1.0).is_err());
        assert!(KernelParams::new(3, 0.0).is_err());
        let p = KernelParams::new(7, 0.5).unwrap();
        assert_eq!(p.order(), 2.5);
        assert!((p.kappa() - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn three_dimensional_resolvent() {
        let p = KernelParams::new(3, 1.0).unwrap();
        for r in [1e-3, 0.1, 1.0, 2.5, 40.0] {
            let want = -(2.0f64).sqrt() * r - (2.0 * std::f64::consts::PI * r).ln();
            let got = p.log_green_radial(r).unwrap();
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{r}");
        }
    }

    #[test]
    fn isotropy() {
        let p = KernelParams::new(4, 1.3).unwrap();
        let x = [0.0, 0.0, 0.0, 0.0];
        let a = log_green(&p, &x, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = log_green(&p, &x, &[0.0, 0.6, 0.8, 0.0]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn gradient_direction_and_large_d_magnitude() {
        let p = KernelParams::new(5, 1.0).unwrap();
        let x = [0.3, -0.2, 1.0, 0.0, 0.5];
        let y = [1.0, 0.1, 0.4, -0.3, 0.2];
        let g = grad2_log_green(&p, &x, &y).unwrap();
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dot: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let cos = dot / (distance(&g, &[0.0; 5]) * distance(&d, &[0.0; 5]));
        assert!((cos + 1.0).abs() < 1e-14);

        let p = KernelParams::new(400, 1.0).unwrap();
        let mag = p.grad_log_green_radial(2.0).unwrap();
        assert!((mag / 199.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = KernelParams::new(5, 1.0).unwrap();
        let x = [0.0; 5];
        let y = [0.6, 0.0, 0.8, 0.0, 0.0];
        let g = grad2_log_green(&p, &x, &y).unwrap();
        let h = 1e-6;
        for i in 0..5 {
            let mut up = y;
            let mut dn = y;
            up[i] += h;
            dn[i] -= h;
            let fd = (log_green(&p, &x, &up).unwrap() - log_green(&p, &x, &dn).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-3), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn gradient_antisymmetry() {
        let p = KernelParams::new(6, 0.7).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let y = [-0.3, 0.0, 1.2, 0.4, 0.1, 0.9];
        let a = grad2_log_green(&p, &x, &y).unwrap();
        let b = grad2_log_green(&p, &y, &x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u + v).abs() < 1e-14);
        }
    }

    #[test]
    fn leading_order_differences_are_power_law() {
        let p = KernelParams::new(30, 0.8).unwrap();
        let y = [0.0; 30];
        let mut x1 = [0.0; 30];
        let mut x2 = [0.0; 30];
        x1[0] = 0.7;
        x2[3] = 1.9;
        let diff = log_green_leading_order(&p, &x1, &y).unwrap() - log_green_leading_order(&p, &x2, &y).unwrap();
        let want = (2.0 - 30.0) * (0.7f64.ln() - 1.9f64.ln());
        assert!((diff - want).abs() < 1e-12);
    }

    #[test]
    fn leading_order_converges_at_high_dimension() {
        let p = KernelParams::new(2000, 1.0).unwrap();
        for r in [0.5, 1.0, 1.5, 2.0] {
            let exact = p.log_green_radial(r).unwrap();
            let approx = p.log_green_leading_order_radial(r).unwrap();
            assert!(((exact - approx) / exact).abs() <= 1e-3, "{r}");
        }
    }

    #[test]
    fn singularity_floor() {
        let p = KernelParams::new(3, 1.0).unwrap();
        let x = [0.0; 3];
        assert!(matches!(log_green(&p, &x, &x), Err(Error::Singularity { .. })));
        assert!(matches!(grad2_log_green(&p, &x, &[1e-13, 0.0, 0.0]), Err(Error::Singularity { .. })));
        assert!(matches!(log_green(&p, &x, &[1.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn radial_monotone() {
        let p = KernelParams::new(12, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let v = p.log_green_radial(k as f64 * 0.05).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }
}
