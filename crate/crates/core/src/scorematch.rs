//! Denoising score matching for the killed-Brownian-motion corruption.
//!
//! For a pair `(ξ, u, v)` the regression target is the closed-form score of
//! the per-atom kernel, `−κ (v/|v|) K_{ν+1}/K_ν(√(2u)|v|)`; its conditional
//! mean given the noisy input is the exact drift away from the `δ`-tube.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::dynamics::{log_sum_exp, DriftEval, DriftField, Trajectory};
use crate::error::{Error, Result};
use crate::kernel::{distance, KernelParams};
use crate::par::{self, Exec};
use crate::prior::{EmpiricalPrior, RecordTable};
use crate::rng;
use crate::specfun;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    /// `σ√u|v|`, the distance of the input from its clean atom.
    pub radial: f64,
    pub keep: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TargetKind {
    #[default]
    Exact,
    /// `−v/(σ√u)`, the large-`d` simplification of the exact target.
    Asymptotic,
}

/// `0.05 σ √d`: a small fraction of the typical noise radius.
pub fn default_delta(kernel: &KernelParams) -> f64 {
    0.05 * kernel.sigma() * (kernel.dim() as f64).sqrt()
}

/// `K_{ν+1}/K_ν(z)`, falling back to the small-argument limit `2ν/z` below
/// the accuracy domain (such pairs sit inside any sensible `δ`-tube anyway).
fn target_ratio(order: f64, z: f64) -> Result<f64> {
    if z < specfun::MIN_ARGUMENT && order > 0.0 {
        return Ok(2.0 * order / z);
    }
    specfun::bessel_k_ratio(order, z)
}

/// `count` bootstrap pairs; pair `i` uses stream `i` of `seed`.
pub fn make_training_pairs(
    prior: &EmpiricalPrior,
    kernel: &KernelParams,
    delta: f64,
    count: usize,
    seed: u64,
    kind: TargetKind,
    exec: Exec,
) -> Result<Vec<TrainingPair>> {
    if prior.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: prior.dim(),
        });
    }
    if !(delta >= 0.0) {
        return Err(Error::invalid("delta", "must be >= 0"));
    }
    if count == 0 {
        return Err(Error::invalid("count", "must be >= 1"));
    }
    let sigma = kernel.sigma();
    let dim = kernel.dim();
    par::try_map_indexed(exec, count, |i| {
        let mut r = rng::stream(seed, i as u64);
        let clean = prior.atom(r.random_range(0..prior.len()));
        let u: f64 = Exp1.sample(&mut r);
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let su = sigma * u.sqrt();
        let input = clean.iter().zip(&v).map(|(x, vi)| x + su * vi).collect();
        let target = match kind {
            TargetKind::Exact => {
                let mag = kernel.kappa() * target_ratio(kernel.order(), (2.0 * u).sqrt() * vn)?;
                v.iter().map(|vi| -mag * vi / vn).collect()
            }
            TargetKind::Asymptotic => v.iter().map(|vi| -vi / su).collect(),
        };
        let radial = su * vn;
        Ok(TrainingPair {
            input,
            target,
            radial,
            keep: radial >= delta,
        })
    })
}

/// Rows `(input, target, radial, keep)` of width `2d + 2`.
pub fn pairs_to_records(pairs: &[TrainingPair], source: &str) -> RecordTable {
    let dim = pairs.first().map_or(0, |p| p.input.len());
    let mut values = Vec::with_capacity(pairs.len() * (2 * dim + 2));
    for p in pairs {
        values.extend_from_slice(&p.input);
        values.extend_from_slice(&p.target);
        values.push(p.radial);
        values.push(if p.keep { 1.0 } else { 0.0 });
    }
    RecordTable {
        width: 2 * dim + 2,
        values,
        labels: None,
        source: source.to_string(),
    }
}

pub fn pairs_from_records(table: &RecordTable) -> Result<Vec<TrainingPair>> {
    if table.width < 4 || table.width % 2 != 0 {
        return Err(Error::CorruptHeader(format!("width {} is not 2d + 2", table.width)));
    }
    let dim = (table.width - 2) / 2;
    Ok((0..table.rows())
        .map(|i| {
            let row = table.row(i);
            TrainingPair {
                input: row[..dim].to_vec(),
                target: row[dim..2 * dim].to_vec(),
                radial: row[2 * dim],
                keep: row[2 * dim + 1] != 0.0,
            }
        })
        .collect())
}

/// `|b(input) − target|²` for every kept pair, in pair order.
pub fn dsm_terms<F: DriftField + ?Sized>(field: &F, pairs: &[TrainingPair], exec: Exec) -> Result<Vec<f64>> {
    let kept: Vec<&TrainingPair> = pairs.iter().filter(|p| p.keep).collect();
    if kept.is_empty() {
        return Err(Error::EmptyAfterFilter {
            delta: pairs.iter().map(|p| p.radial).fold(f64::NAN, f64::max),
        });
    }
    par::try_map_indexed(exec, kept.len(), |i| {
        let p = kept[i];
        let b = field.eval(&p.input)?.drift;
        Ok(b.iter().zip(&p.target).map(|(x, t)| (x - t) * (x - t)).sum())
    })
}

/// Mean over kept pairs of `|b(input) − target|²`, i.e.
/// `|b(input) + κ (v/|v|) K_{ν+1}/K_ν|²`.
pub fn dsm_loss<F: DriftField + ?Sized>(field: &F, pairs: &[TrainingPair], exec: Exec) -> Result<f64> {
    let t = dsm_terms(field, pairs, exec)?;
    Ok(t.iter().sum::<f64>() / t.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedDifference {
    /// Mean of `loss_b − loss_a` over the shared pairs.
    pub mean: f64,
    pub se: f64,
}

impl PairedDifference {
    pub fn z(&self) -> f64 {
        self.mean / self.se
    }
}

/// Loss difference `b − a` evaluated on the same pairs.
pub fn paired_loss_difference<A, B>(a: &A, b: &B, pairs: &[TrainingPair], exec: Exec) -> Result<PairedDifference>
where
    A: DriftField + ?Sized,
    B: DriftField + ?Sized,
{
    let ta = dsm_terms(a, pairs, exec)?;
    let tb = dsm_terms(b, pairs, exec)?;
    let diffs: Vec<f64> = tb.iter().zip(&ta).map(|(y, x)| y - x).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(PairedDifference {
        mean,
        se: (var / n).sqrt(),
    })
}

/// Nadaraya–Watson regression of targets on inputs with a Gaussian kernel.
#[derive(Clone, Debug)]
pub struct LocalDrift {
    dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    bandwidth: f64,
}

pub fn fit_local_drift(pairs: &[TrainingPair], bandwidth: f64) -> Result<LocalDrift> {
    if !(bandwidth > 0.0) {
        return Err(Error::invalid("bandwidth", format!("must be > 0, got {bandwidth}")));
    }
    let kept: Vec<&TrainingPair> = pairs.iter().filter(|p| p.keep).collect();
    let Some(first) = kept.first() else {
        return Err(Error::EmptyAfterFilter { delta: f64::NAN });
    };
    let dim = first.input.len();
    Ok(LocalDrift {
        dim,
        inputs: kept.iter().flat_map(|p| p.input.iter().copied()).collect(),
        targets: kept.iter().flat_map(|p| p.target.iter().copied()).collect(),
        bandwidth,
    })
}

impl LocalDrift {
    pub fn len(&self) -> usize {
        self.inputs.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

impl DriftField for LocalDrift {
    fn dim(&self) -> usize {
        self.dim
    }

    /// `log_h` is the log of the (unnormalised) kernel density estimate.
    fn eval(&self, y: &[f64]) -> Result<DriftEval> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        let scale = -0.5 / (self.bandwidth * self.bandwidth);
        let logw: Vec<f64> = self
            .inputs
            .chunks_exact(self.dim)
            .map(|x| {
                let r = distance(x, y);
                scale * r * r
            })
            .collect();
        let lse = log_sum_exp(&logw);
        let mut drift = vec![0.0; self.dim];
        for (lw, t) in logw.iter().zip(self.targets.chunks_exact(self.dim)) {
            let w = (lw - lse).exp();
            if w == 0.0 {
                continue;
            }
            for (b, ti) in drift.iter_mut().zip(t) {
                *b += w * ti;
            }
        }
        let norm = drift.iter().map(|b| b * b).sum::<f64>().sqrt();
        Ok(DriftEval {
            distance_estimate: if norm > 0.0 { self.dim as f64 / norm } else { f64::INFINITY },
            log_h: lse - (self.len() as f64).ln(),
            nearest_atom: None,
            drift,
        })
    }
}

/// Per trajectory, `(Σ |c − r|²(Y_{s_k}) (s_{k+1} − s_k) 1{dist(Y_{s_k}, 𝓜) > δ̃})^{1/2}`
/// over the recorded states. Distances to the support come from the
/// reference field; when it does not expose its support nothing is excluded.
pub fn drift_l2_error_along_paths<C, R>(
    candidate: &C,
    reference: &R,
    trajectories: &[Trajectory],
    exclusion_delta: f64,
) -> Result<Vec<f64>>
where
    C: DriftField + ?Sized,
    R: DriftField + ?Sized,
{
    trajectories
        .iter()
        .map(|t| {
            let mut acc = 0.0;
            for w in t.states.windows(2) {
                let y = &w[0].point;
                if reference.nearest_atom(y).is_some_and(|(_, d)| d <= exclusion_delta) {
                    continue;
                }
                let c = candidate.eval(y)?.drift;
                let r = reference.eval(y)?.drift;
                let e2: f64 = c.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum();
                acc += e2 * (w[1].time - w[0].time);
            }
            Ok(acc.sqrt())
        })
        .collect()
}
