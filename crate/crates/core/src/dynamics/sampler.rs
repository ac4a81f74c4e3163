use std::fmt;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DriftField, ModelConfig};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::prior::RecordTable;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ThresholdHit,
    StepCap,
    SingularityFloor,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::ThresholdHit => "threshold_hit",
            StopReason::StepCap => "step_cap",
            StopReason::SingularityFloor => "singularity_floor",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub time: f64,
    pub point: Vec<f64>,
    /// Running `∫₀ˢ |b(Y_r)|² dr`.
    pub accumulated_l2sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Recorded states; always includes the start and the endpoint.
    pub states: Vec<State>,
    pub stop_reason: StopReason,
    pub endpoint: Vec<f64>,
    pub endpoint_snapped: Option<usize>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_l2sq(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.accumulated_l2sq)
    }

    pub fn duration(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.time)
    }

    /// Rows `(s, y₁, …, y_d, ∫|b|²)`.
    pub fn to_records(&self) -> RecordTable {
        let dim = self.endpoint.len();
        let mut values = Vec::with_capacity(self.states.len() * (dim + 2));
        for s in &self.states {
            values.push(s.time);
            values.extend_from_slice(&s.point);
            values.push(s.accumulated_l2sq);
        }
        RecordTable {
            width: dim + 2,
            values,
            labels: None,
            source: format!("trajectory stop={} steps={}", self.stop_reason, self.steps),
        }
    }

    pub fn to_csv(&self) -> String {
        let dim = self.endpoint.len();
        let mut out = String::from("s");
        for k in 0..dim {
            out.push_str(&format!(",y{k}"));
        }
        out.push_str(",accumulated_l2sq\n");
        for s in &self.states {
            out.push_str(&s.time.to_string());
            for y in &s.point {
                out.push(',');
                out.push_str(&y.to_string());
            }
            out.push(',');
            out.push_str(&s.accumulated_l2sq.to_string());
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn snapped<F: DriftField + ?Sized>(field: &F, y: &[f64], config: &ModelConfig) -> Option<usize> {
    field
        .nearest_atom(y)
        .filter(|&(_, d)| d < 10.0 * config.snap_radius)
        .map(|(i, _)| i)
}

/// Euler–Maruyama with `dt = min(dt_max, c/|b|²)`, stopped at the first of
/// `∫|b|² ≥ M²`, the step cap, or arrival within `snap_radius` of an atom.
/// A singularity reported by the field counts as arrival.
pub fn reverse_sample_with<F: DriftField + ?Sized>(
    field: &F,
    y0: &[f64],
    config: &ModelConfig,
    rng: &mut rng::Rng,
) -> Result<Trajectory> {
    config.validate()?;
    if y0.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: y0.len(),
        });
    }
    let m2 = config.stop_threshold * config.stop_threshold;
    let mut y = y0.to_vec();
    let mut states = vec![State {
        time: 0.0,
        point: y.clone(),
        accumulated_l2sq: 0.0,
    }];

    if field.nearest_atom(&y).is_some_and(|(_, d)| d < config.snap_radius) {
        return Ok(Trajectory {
            states,
            stop_reason: StopReason::SingularityFloor,
            endpoint_snapped: snapped(field, &y, config),
            endpoint: y,
            steps: 0,
        });
    }

    let mut time = 0.0;
    let mut l2 = 0.0;
    let mut steps = 0;
    let stop_reason = loop {
        if steps == config.max_steps {
            break StopReason::StepCap;
        }
        let eval = match field.eval(&y) {
            Ok(e) => e,
            Err(Error::Singularity { .. }) => break StopReason::SingularityFloor,
            Err(e) => return Err(e),
        };
        let b2 = eval.norm_sq();
        let dt = if b2 > 0.0 {
            config.dt_max.min(config.dt_scale / b2)
        } else {
            config.dt_max
        };
        let sq = dt.sqrt();
        for (yk, bk) in y.iter_mut().zip(&eval.drift) {
            let w: f64 = StandardNormal.sample(rng);
            *yk += bk * dt + sq * w;
        }
        time += dt;
        l2 += b2 * dt;
        steps += 1;
        if !y.iter().all(|v| v.is_finite()) || !l2.is_finite() {
            return Err(Error::NonFiniteState { step: steps });
        }
        if config.record_stride > 0 && steps % config.record_stride == 0 {
            states.push(State {
                time,
                point: y.clone(),
                accumulated_l2sq: l2,
            });
        }
        if l2 >= m2 {
            break StopReason::ThresholdHit;
        }
        if field.nearest_atom(&y).is_some_and(|(_, d)| d < config.snap_radius) {
            break StopReason::SingularityFloor;
        }
    };

    if states.last().is_none_or(|s| s.time != time) {
        states.push(State {
            time,
            point: y.clone(),
            accumulated_l2sq: l2,
        });
    }
    let endpoint_snapped = match stop_reason {
        StopReason::StepCap => None,
        _ => snapped(field, &y, config),
    };
    Ok(Trajectory {
        states,
        stop_reason,
        endpoint: y,
        endpoint_snapped,
        steps,
    })
}

/// Single trajectory on stream 0 of `config.seed`.
pub fn reverse_sample<F: DriftField + ?Sized>(field: &F, y0: &[f64], config: &ModelConfig) -> Result<Trajectory> {
    reverse_sample_with(field, y0, config, &mut rng::stream(config.seed, 0))
}

/// Trajectory `i` starts at `starts[i]` and uses stream `i` of `config.seed`,
/// so the batch is identical under any execution mode or worker count.
pub fn reverse_sample_batch<F: DriftField + ?Sized>(
    field: &F,
    starts: &[Vec<f64>],
    config: &ModelConfig,
    exec: Exec,
) -> Result<Vec<Trajectory>> {
    par::try_map_indexed(exec, starts.len(), |i| {
        reverse_sample_with(field, &starts[i], config, &mut rng::stream(config.seed, i as u64))
    })
}
