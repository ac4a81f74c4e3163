use std::path::{Path, PathBuf};

use super::spec::{ExperimentKind, SpecFile};
use super::RunOptions;
use crate::dynamics::ModelConfig;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::par::Exec;
use crate::prior::{generate_synthetic, load_prior, EmpiricalPrior, SyntheticKind};
use crate::rng;

/// Everything an experiment needs besides its own `[params]`.
#[derive(Debug)]
pub struct Context {
    pub spec: SpecFile,
    pub name: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub repetitions: usize,
    pub base_dir: PathBuf,
    pub output_root: PathBuf,
    pub exec: Exec,
}

impl Context {
    pub fn from_spec(spec: SpecFile, base_dir: &Path, opts: &RunOptions) -> Result<Self> {
        let e = spec.section("experiment");
        let name: String = e.require("name")?;
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(Error::invalid("name", format!("`{name}` is not a valid run directory name")));
        }
        let kind = e.require("kind")?;
        let seed = match opts.seed {
            Some(s) => {
                e.raw("seed");
                s
            }
            None => e.get_or("seed", 0u64)?,
        };
        let repetitions = e.get_or("repetitions", 1usize)?;
        if repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be >= 1"));
        }
        let spec_out: Option<String> = e.get("outputs")?;
        let output_root = match (&opts.out, spec_out) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => base_dir.join(o),
            (None, None) => PathBuf::from("polar-denoise-runs"),
        };
        Ok(Self {
            name,
            kind,
            seed,
            repetitions,
            base_dir: base_dir.to_path_buf(),
            output_root,
            exec: Exec::default(),
            spec,
        })
    }

    pub fn params(&self) -> &super::spec::Section {
        self.spec.section("params")
    }

    /// Independent sub-seed for one purpose (prior, observations, sampler, ...).
    pub fn seed_for(&self, salt: u64) -> u64 {
        rng::derive(self.seed, salt)
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn dim(&self) -> Result<usize> {
        self.spec.section("model").require("dim")
    }

    /// `[model]` at dimension `dim`; unspecified keys take the defaults of
    /// [`ModelConfig::new`].
    pub fn model(&self, dim: usize, seed: u64) -> Result<ModelConfig> {
        let m = self.spec.section("model");
        m.raw("dim");
        let mut kernel = KernelParams::new(dim, m.get_or("sigma", 1.0)?)?;
        if let Some(f) = m.get("distance_floor")? {
            kernel = kernel.with_distance_floor(f)?;
        }
        let mut c = ModelConfig::new(kernel, seed);
        if let Some(v) = m.get("stop_threshold")? {
            c.stop_threshold = v;
        }
        if let Some(v) = m.get("stop_threshold_per_dim")? {
            let v: f64 = v;
            c.stop_threshold = v * dim as f64;
        }
        c.max_steps = m.get_or("max_steps", c.max_steps)?;
        c.dt_max = m.get_or("dt_max", c.dt_max)?;
        c.dt_scale = m.get_or("dt_scale", c.dt_scale)?;
        c.snap_radius = m.get_or("snap_radius", c.snap_radius)?;
        c.record_stride = m.get_or("record_stride", c.record_stride)?;
        c.validate()?;
        Ok(c)
    }

    /// `[prior]` at dimension `dim`: `source = synthetic` (default, with
    /// `[shape]` parameters) or `source = file` for a saved prior.
    pub fn prior(&self, dim: usize) -> Result<EmpiricalPrior> {
        let p = self.spec.section("prior");
        let source: String = p.get_or("source", "synthetic".to_string())?;
        match source.as_str() {
            "synthetic" => {
                let kind: SyntheticKind = p.require("kind")?;
                let n = p.get_or("n", if kind == SyntheticKind::TwoPoint { 2 } else { 10 })?;
                let seed = p.get_or("seed", self.seed_for(1))?;
                let shape = self.spec.section("shape").numeric_map()?;
                generate_synthetic(kind, dim, n, seed, &shape)
            }
            "file" => {
                let path: String = p.require("path")?;
                let prior = load_prior(self.resolve(&path))?;
                if prior.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: prior.dim(),
                    });
                }
                Ok(prior)
            }
            other => Err(Error::invalid("source", format!("unknown prior source `{other}`"))),
        }
    }
}
