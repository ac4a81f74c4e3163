//! Experiment runner: parse a spec, run one experiment, write its CSV/JSON
//! artifacts and a manifest tying them to the spec hash and seed.
//!
//! Artifacts are assembled in memory and written only once the experiment
//! finishes, so an error never leaves a half-written run directory behind.
//! Failed checks still write everything (the artifacts are the evidence) and
//! are reported back for a non-zero exit.

mod audit;
mod concentration;
mod context;
mod image;
mod profile;
mod robustness;
mod sampler;
pub mod spec;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use audit::{audit_specfun, AuditRow};
pub use context::Context;
pub use spec::{ExperimentKind, SpecFile};

use crate::error::Error;
use crate::par;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(#[source] Error),
    #[error("{0}")]
    Internal(#[source] Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 1,
            RunError::Internal(_) => 2,
        }
    }
}

impl From<Error> for RunError {
    /// Bad input of any kind is a usage error; numerical breakdown is internal.
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Range { .. } | Error::Singularity { .. } | Error::NonFiniteState { .. } => {
                RunError::Internal(e)
            }
            _ => RunError::Usage(e),
        }
    }
}

/// Files and check results produced by one experiment.
#[derive(Debug, Default)]
pub struct Report {
    files: Vec<(String, Vec<u8>)>,
    failures: Vec<String>,
}

impl Report {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn add_json(&mut self, name: impl Into<String>, value: &Value) {
        let mut s = serde_json::to_string_pretty(value).expect("json values serialise");
        s.push('\n');
        self.add(name, s);
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    /// `(name, bytes)` in the order the experiment produced them.
    pub fn files(&self) -> &[(String, Vec<u8>)] {
        &self.files
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

/// CSV with a header row; values use Rust's shortest round-trip formatting.
pub(crate) struct Csv(String);

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv(columns.join(",") + "\n")
    }

    pub fn row(&mut self, cells: &[String]) {
        self.0.push_str(&cells.join(","));
        self.0.push('\n');
    }

    pub fn finish(self) -> String {
        self.0
    }
}

#[macro_export]
#[doc(hidden)]
macro_rules! cells {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct Outcome {
    pub name: String,
    pub kind: ExperimentKind,
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

/// Runs the experiment described by `text` without touching the filesystem
/// (except to read referenced inputs relative to `base_dir`).
pub fn run_in_memory(text: &str, base_dir: &Path, opts: &RunOptions) -> Result<(Context, Report), RunError> {
    let spec = SpecFile::parse(text)?;
    let ctx = Context::from_spec(spec, base_dir, opts)?;
    let mut report = Report::default();
    par::with_jobs(opts.jobs, || -> Result<(), RunError> {
        match ctx.kind {
            ExperimentKind::ConcentrationTable => concentration::run(&ctx, &mut report),
            ExperimentKind::SamplerVsOracle => sampler::run(&ctx, &mut report),
            ExperimentKind::DriftProfile => profile::run(&ctx, &mut report),
            ExperimentKind::RobustnessTheorem2 => robustness::run(&ctx, &mut report),
            ExperimentKind::ImageReconstruction => image::run(&ctx, &mut report),
            ExperimentKind::SpecfunAudit => audit::run(&ctx, &mut report),
        }
        .map_err(RunError::from)
    })?;
    ctx.spec.check_all_used()?;
    let manifest = json!({
        "name": ctx.name,
        "kind": ctx.kind.name(),
        "seed": ctx.seed,
        "repetitions": ctx.repetitions,
        "spec_sha256": sha256_hex(text.as_bytes()),
        "version": VERSION,
        "artifacts": report.files.iter().map(|(n, b)| json!({
            "file": n,
            "bytes": b.len(),
            "sha256": sha256_hex(b),
        })).collect::<Vec<_>>(),
        "failed_checks": report.failures,
    });
    report.add_json("manifest.json", &manifest);
    Ok((ctx, report))
}

fn write_all(dir: &Path, report: &Report) -> Result<Vec<String>, Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, bytes) in &report.files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            for w in &written {
                let _ = std::fs::remove_file(dir.join(w));
            }
            let _ = std::fs::remove_dir(dir);
            return Err(Error::io(path, e));
        }
        written.push(name.clone());
    }
    Ok(written)
}

/// Parses, runs and writes one spec file into `<out>/<name>/`.
pub fn run_spec_file(path: &Path, opts: &RunOptions) -> Result<Outcome, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Usage(Error::io(path, e)))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (ctx, report) = run_in_memory(&text, base, opts)?;
    let dir = ctx.output_root.join(&ctx.name);
    let files = write_all(&dir, &report).map_err(RunError::Usage)?;
    Ok(Outcome {
        name: ctx.name,
        kind: ctx.kind,
        dir,
        files,
        failures: report.failures,
    })
}
