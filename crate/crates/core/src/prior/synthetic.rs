use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::EmpiricalPrior;
use crate::error::{Error, Result};
use crate::rng;

pub type ShapeParams = BTreeMap<String, f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Two atoms at `±(separation/2)·e₁`.
    TwoPoint,
    /// Uniform on the sphere of `radius` about the origin.
    SphereShell,
    /// Uniform on a circle of `radius` in the first two coordinates. Requires
    /// `d ≥ 4` so the circle has codimension at least two with room to spare.
    CircleEmbedded,
    /// Uniform in `[-extent, extent]^{d-2}` on the affine subspace where the
    /// last two coordinates equal `offset`.
    AffineCodim2,
    /// `centers` Gaussian blobs of standard deviation `spread`; atom `i`
    /// belongs to cluster `i mod centers`.
    ClusterMixture,
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::TwoPoint => "two_point",
            Self::SphereShell => "sphere_shell",
            Self::CircleEmbedded => "circle_embedded",
            Self::AffineCodim2 => "affine_codim2",
            Self::ClusterMixture => "cluster_mixture",
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "two_point" => Self::TwoPoint,
            "sphere_shell" => Self::SphereShell,
            "circle_embedded" => Self::CircleEmbedded,
            "affine_codim2" => Self::AffineCodim2,
            "cluster_mixture" => Self::ClusterMixture,
            other => return Err(Error::invalid("kind", format!("unknown generator `{other}`"))),
        })
    }
}

fn param(params: &ShapeParams, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn positive(params: &ShapeParams, key: &str, default: f64) -> Result<f64> {
    let v = param(params, key, default);
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(key, format!("must be finite and > 0, got {v}")));
    }
    Ok(v)
}

fn gaussian_vec(rng: &mut rng::Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit_vec(rng: &mut rng::Rng, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, dim);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Deterministic synthetic prior. Identical arguments give bitwise identical atoms.
pub fn generate_synthetic(
    kind: SyntheticKind,
    dim: usize,
    n: usize,
    seed: u64,
    params: &ShapeParams,
) -> Result<EmpiricalPrior> {
    if dim < 3 {
        return Err(Error::invalid("dim", format!("must be >= 3, got {dim}")));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let mut rng = rng::stream(seed, 0);
    let mut atoms = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);

    match kind {
        SyntheticKind::TwoPoint => {
            if n != 2 {
                return Err(Error::invalid("n", format!("two_point has exactly 2 atoms, got {n}")));
            }
            let half = positive(params, "separation", 2.0)? / 2.0;
            for (k, s) in [half, -half].into_iter().enumerate() {
                let mut a = vec![0.0; dim];
                a[0] = s;
                atoms.extend(a);
                labels.push(k.to_string());
            }
        }
        SyntheticKind::SphereShell => {
            let radius = positive(params, "radius", 1.0)?;
            for _ in 0..n {
                atoms.extend(unit_vec(&mut rng, dim).into_iter().map(|x| radius * x));
                labels.push("shell".into());
            }
        }
        SyntheticKind::CircleEmbedded => {
            if dim < 4 {
                return Err(Error::invalid("dim", "circle_embedded requires dim >= 4"));
            }
            let radius = positive(params, "radius", 1.0)?;
            for _ in 0..n {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let mut a = vec![0.0; dim];
                a[0] = radius * theta.cos();
                a[1] = radius * theta.sin();
                atoms.extend(a);
                labels.push("circle".into());
            }
        }
        SyntheticKind::AffineCodim2 => {
            let extent = positive(params, "extent", 1.0)?;
            let offset = param(params, "offset", 0.0);
            for _ in 0..n {
                let mut a: Vec<f64> = (0..dim).map(|_| rng.random_range(-extent..=extent)).collect();
                a[dim - 2] = offset;
                a[dim - 1] = offset;
                atoms.extend(a);
                labels.push("plane".into());
            }
        }
        SyntheticKind::ClusterMixture => {
            let k = param(params, "centers", 2.0);
            if !(k >= 1.0) || k.fract() != 0.0 || k as usize > n {
                return Err(Error::invalid("centers", format!("must be an integer in [1, n], got {k}")));
            }
            let k = k as usize;
            let spread = positive(params, "spread", 0.1)?;
            let scale = positive(params, "center_scale", 1.0)?;
            let centers: Vec<Vec<f64>> = (0..k)
                .map(|_| gaussian_vec(&mut rng, dim).into_iter().map(|x| scale * x).collect())
                .collect();
            for i in 0..n {
                let c = &centers[i % k];
                let noise = gaussian_vec(&mut rng, dim);
                atoms.extend(c.iter().zip(noise).map(|(m, e)| m + spread * e));
                labels.push((i % k).to_string());
            }
        }
    }

    let source = format!("synthetic:{kind}:dim={dim}:n={n}:seed={seed}:{}", render_params(params));
    EmpiricalPrior::from_flat(dim, atoms, source)?.with_labels(labels)
}

/// Cluster centres drawn by [`generate_synthetic`] for `ClusterMixture`.
#[cfg(test)]
pub(crate) fn cluster_centers(dim: usize, seed: u64, params: &ShapeParams) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, 0);
    let k = param(params, "centers", 2.0) as usize;
    let scale = param(params, "center_scale", 1.0);
    (0..k)
        .map(|_| gaussian_vec(&mut rng, dim).into_iter().map(|x| scale * x).collect())
        .collect()
}

fn render_params(params: &ShapeParams) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}
