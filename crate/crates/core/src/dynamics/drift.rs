use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernel::{distance, KernelParams};
use crate::prior::EmpiricalPrior;
use crate::rng;
use crate::specfun;

/// One evaluation of a drift field at a point `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftEval {
    pub drift: Vec<f64>,
    /// `log h(y)`; perturbed fields report their base value.
    pub log_h: f64,
    /// Atom carrying the largest posterior weight, when the field knows its atoms.
    pub nearest_atom: Option<usize>,
    /// `d / |b(y)|`, the leading-order distance of `y` from the support.
    pub distance_estimate: f64,
}

impl DriftEval {
    pub fn norm_sq(&self) -> f64 {
        self.drift.iter().map(|b| b * b).sum()
    }
}

/// A drift field `y ↦ b(y)` for the backward diffusion.
pub trait DriftField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, y: &[f64]) -> Result<DriftEval>;

    /// Nearest support atom and its distance, if the field knows its support.
    fn nearest_atom(&self, _y: &[f64]) -> Option<(usize, f64)> {
        None
    }
}

impl<T: DriftField + ?Sized> DriftField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, y: &[f64]) -> Result<DriftEval> {
        (**self).eval(y)
    }
    fn nearest_atom(&self, y: &[f64]) -> Option<(usize, f64)> {
        (**self).nearest_atom(y)
    }
}

impl<T: DriftField + ?Sized> DriftField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, y: &[f64]) -> Result<DriftEval> {
        (**self).eval(y)
    }
    fn nearest_atom(&self, y: &[f64]) -> Option<(usize, f64)> {
        (**self).nearest_atom(y)
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn distance_estimate(dim: usize, drift: &[f64]) -> f64 {
    let norm = drift.iter().map(|b| b * b).sum::<f64>().sqrt();
    if norm > 0.0 {
        dim as f64 / norm
    } else {
        f64::INFINITY
    }
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `b(y) = ∇ log h(y)` with `h = n⁻¹ Σᵢ G(xᵢ, ·)`: a softmax-weighted sum of
/// the per-atom kernel gradients.
#[derive(Clone, Debug)]
pub struct ExactDrift {
    prior: Arc<EmpiricalPrior>,
    kernel: KernelParams,
    snap_radius: f64,
}

impl ExactDrift {
    pub fn new(prior: impl Into<Arc<EmpiricalPrior>>, kernel: KernelParams) -> Result<Self> {
        let prior = prior.into();
        if prior.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                found: prior.dim(),
            });
        }
        Ok(Self {
            snap_radius: Self::resolvable(&kernel),
            prior,
            kernel,
        })
    }

    /// Smallest distance at which the kernel is evaluated: the distance floor,
    /// or the bottom of the Bessel accuracy domain if that is larger.
    fn resolvable(kernel: &KernelParams) -> f64 {
        kernel.distance_floor().max(specfun::MIN_ARGUMENT / kernel.kappa())
    }

    /// Evaluations closer than `radius` to an atom report a singularity.
    pub fn with_snap_radius(mut self, radius: f64) -> Self {
        self.snap_radius = radius.max(Self::resolvable(&self.kernel));
        self
    }

    pub fn prior(&self) -> &EmpiricalPrior {
        &self.prior
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    /// Normalised softmax weights `wᵢ(y)` alongside the evaluation.
    pub fn eval_with_weights(&self, y: &[f64]) -> Result<(DriftEval, Vec<f64>)> {
        self.prior.check_point(y)?;
        let n = self.prior.len();
        let mut dists = Vec::with_capacity(n);
        let mut log_g = Vec::with_capacity(n);
        let mut mags = Vec::with_capacity(n);
        for a in self.prior.atoms() {
            let r = distance(a, y);
            if r < self.snap_radius {
                return Err(Error::Singularity {
                    distance: r,
                    floor: self.snap_radius,
                });
            }
            let (lg, mag) = self.kernel.radial_eval(r)?;
            dists.push(r);
            log_g.push(lg);
            mags.push(mag);
        }
        let lse = log_sum_exp(&log_g);
        let weights: Vec<f64> = log_g.iter().map(|l| (l - lse).exp()).collect();
        let mut drift = vec![0.0; y.len()];
        for (i, a) in self.prior.atoms().enumerate() {
            let scale = weights[i] * mags[i] / dists[i];
            if scale == 0.0 {
                continue;
            }
            for (b, (xa, ya)) in drift.iter_mut().zip(a.iter().zip(y)) {
                *b += scale * (xa - ya);
            }
        }
        let eval = DriftEval {
            distance_estimate: distance_estimate(y.len(), &drift),
            log_h: lse - (n as f64).ln(),
            nearest_atom: Some(argmax_lowest(&log_g)),
            drift,
        };
        Ok((eval, weights))
    }
}

impl DriftField for ExactDrift {
    fn dim(&self) -> usize {
        self.prior.dim()
    }

    fn eval(&self, y: &[f64]) -> Result<DriftEval> {
        self.eval_with_weights(y).map(|(e, _)| e)
    }

    fn nearest_atom(&self, y: &[f64]) -> Option<(usize, f64)> {
        Some(self.prior.nearest(y))
    }
}

/// Large-`d` surrogate `b(y) ≈ d Σ (xᵢ−y)|xᵢ−y|^{-d} / Σ |xᵢ−y|^{2-d}`.
/// Diagnostic only; noticeably off at small `d`.
#[derive(Clone, Debug)]
pub struct LeadingOrderDrift {
    prior: Arc<EmpiricalPrior>,
    kernel: KernelParams,
}

impl LeadingOrderDrift {
    pub fn new(prior: impl Into<Arc<EmpiricalPrior>>, kernel: KernelParams) -> Result<Self> {
        let prior = prior.into();
        if prior.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                found: prior.dim(),
            });
        }
        Ok(Self { prior, kernel })
    }
}

impl DriftField for LeadingOrderDrift {
    fn dim(&self) -> usize {
        self.prior.dim()
    }

    fn eval(&self, y: &[f64]) -> Result<DriftEval> {
        self.prior.check_point(y)?;
        let d = self.prior.dim() as f64;
        let mut dists = Vec::with_capacity(self.prior.len());
        let mut log_w = Vec::with_capacity(self.prior.len());
        let mut log_g = Vec::with_capacity(self.prior.len());
        for a in self.prior.atoms() {
            let r = distance(a, y);
            log_g.push(self.kernel.log_green_leading_order_radial(r)?);
            log_w.push((2.0 - d) * r.ln());
            dists.push(r);
        }
        let lse = log_sum_exp(&log_w);
        let mut drift = vec![0.0; y.len()];
        for (i, a) in self.prior.atoms().enumerate() {
            let scale = (log_w[i] - lse).exp() * d / (dists[i] * dists[i]);
            for (b, (xa, ya)) in drift.iter_mut().zip(a.iter().zip(y)) {
                *b += scale * (xa - ya);
            }
        }
        Ok(DriftEval {
            distance_estimate: distance_estimate(y.len(), &drift),
            log_h: log_sum_exp(&log_g) - (self.prior.len() as f64).ln(),
            nearest_atom: Some(argmax_lowest(&log_w)),
            drift,
        })
    }

    fn nearest_atom(&self, y: &[f64]) -> Option<(usize, f64)> {
        Some(self.prior.nearest(y))
    }
}

/// `b ≡ 0`: pure Brownian motion, for sanity checks of the integrator.
#[derive(Clone, Copy, Debug)]
pub struct ZeroDrift {
    pub dim: usize,
}

impl DriftField for ZeroDrift {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, y: &[f64]) -> Result<DriftEval> {
        Ok(DriftEval {
            drift: vec![0.0; y.len()],
            log_h: 0.0,
            nearest_atom: None,
            distance_estimate: f64::INFINITY,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Random-Fourier-feature Gaussian field, bounded by `magnitude` everywhere.
    AdditiveGaussianField,
    /// Constant vector of length `magnitude` in a seeded random direction.
    SmoothBias,
}

impl std::str::FromStr for PerturbationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive_gaussian_field" => Ok(Self::AdditiveGaussianField),
            "smooth_bias" => Ok(Self::SmoothBias),
            other => Err(Error::invalid("mode", format!("unknown perturbation `{other}`"))),
        }
    }
}

const FEATURES: usize = 16;

#[derive(Clone, Debug)]
struct Feature {
    frequency: Vec<f64>,
    phase: f64,
    direction: Vec<f64>,
    coefficient: f64,
}

/// `b̃ = b + p` for a deterministic, smooth, bounded perturbation `p`.
#[derive(Clone)]
pub struct PerturbedDrift {
    base: Arc<dyn DriftField>,
    mode: PerturbationMode,
    magnitude: f64,
    features: Vec<Feature>,
    bias: Vec<f64>,
    support_visible: bool,
}

fn unit(rng: &mut rng::Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl PerturbedDrift {
    /// `length_scale` sets the correlation length of the Gaussian field
    /// (its Lipschitz constant is about `magnitude / length_scale`).
    pub fn new(
        base: Arc<dyn DriftField>,
        mode: PerturbationMode,
        magnitude: f64,
        length_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(magnitude >= 0.0) || !magnitude.is_finite() {
            return Err(Error::invalid("magnitude", format!("must be >= 0, got {magnitude}")));
        }
        if !(length_scale > 0.0) {
            return Err(Error::invalid("length_scale", "must be > 0"));
        }
        let dim = base.dim();
        let mut rng = rng::stream(seed, 0);
        let features = (0..FEATURES)
            .map(|_| Feature {
                frequency: (0..dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .map(|w: f64| w / length_scale)
                    .collect(),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                direction: unit(&mut rng, dim),
                coefficient: StandardNormal.sample(&mut rng),
            })
            .collect::<Vec<_>>();
        let bias = unit(&mut rng, dim);
        Ok(Self {
            base,
            mode,
            magnitude,
            features,
            bias,
            support_visible: true,
        })
    }

    /// Hides the base field's support from the sampler, so only the `L²`
    /// threshold (or the step cap) can stop a trajectory.
    pub fn hide_support(mut self) -> Self {
        self.support_visible = false;
        self
    }

    pub fn perturbation(&self, y: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; y.len()];
        if self.magnitude == 0.0 {
            return p;
        }
        match self.mode {
            PerturbationMode::SmoothBias => {
                for (pi, u) in p.iter_mut().zip(&self.bias) {
                    *pi = self.magnitude * u;
                }
            }
            PerturbationMode::AdditiveGaussianField => {
                let norm: f64 = self.features.iter().map(|f| f.coefficient.abs()).sum();
                for f in &self.features {
                    let arg: f64 = f.frequency.iter().zip(y).map(|(w, x)| w * x).sum::<f64>() + f.phase;
                    let s = self.magnitude * f.coefficient * arg.cos() / norm;
                    for (pi, u) in p.iter_mut().zip(&f.direction) {
                        *pi += s * u;
                    }
                }
            }
        }
        p
    }
}

impl DriftField for PerturbedDrift {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, y: &[f64]) -> Result<DriftEval> {
        let mut e = self.base.eval(y)?;
        if self.magnitude > 0.0 {
            for (b, p) in e.drift.iter_mut().zip(self.perturbation(y)) {
                *b += p;
            }
            e.distance_estimate = distance_estimate(y.len(), &e.drift);
        }
        Ok(e)
    }

    fn nearest_atom(&self, y: &[f64]) -> Option<(usize, f64)> {
        if self.support_visible {
            self.base.nearest_atom(y)
        } else {
            None
        }
    }
}
