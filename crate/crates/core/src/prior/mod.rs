//! Empirical prior: a finite cloud of atoms in `R^d` with uniform weights.
//! A finite point set is polar for Brownian motion when `d ≥ 3`.

mod format;
mod idx;
mod image;
mod synthetic;

pub use format::{
    load_prior, load_records, read_prior, read_records, save_prior, save_records, write_prior, write_prior_csv,
    RecordTable, FORMAT_VERSION, MAGIC,
};
pub use idx::{load_idx, parse_idx};
pub use image::{discretize, ImageGrid};
pub use synthetic::{generate_synthetic, ShapeParams, SyntheticKind};

use crate::error::{Error, Result};
use crate::kernel::distance;

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalPrior {
    dim: usize,
    atoms: Vec<f64>,
    labels: Option<Vec<String>>,
    source: String,
}

impl EmpiricalPrior {
    /// Builds a prior from a flat row-major atom buffer of `n * dim` values.
    pub fn from_flat(dim: usize, atoms: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if dim < 3 {
            return Err(Error::invalid("dim", format!("must be >= 3, got {dim}")));
        }
        if atoms.is_empty() || atoms.len() % dim != 0 {
            return Err(Error::invalid(
                "atoms",
                format!("need a nonzero multiple of dim={dim} values, got {}", atoms.len()),
            ));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("atoms", "non-finite coordinate"));
        }
        Ok(Self {
            dim,
            atoms,
            labels: None,
            source: source.into(),
        })
    }

    pub fn from_points(points: &[Vec<f64>], source: impl Into<String>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(dim, flat, source)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::invalid(
                "labels",
                format!("expected {} labels, got {}", self.len(), labels.len()),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.atoms.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.atoms
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        Ok(())
    }

    /// Nearest atom to `y` and its distance; ties go to the lowest index.
    pub fn nearest(&self, y: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, a) in self.atoms().enumerate() {
            let r = distance(a, y);
            if r < best.1 {
                best = (i, r);
            }
        }
        best
    }

    /// Fraction of atoms (with multiplicity) inside the closed ball `B(center, radius)`.
    pub fn ball_fraction(&self, center: &[f64], radius: f64) -> f64 {
        let inside = self.atoms().filter(|a| distance(a, center) <= radius).count();
        inside as f64 / self.len() as f64
    }
}
