use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use super::{Context, Csv, Report};
use crate::cells;
use crate::dynamics::{
    forward_corrupt, reverse_sample_batch, DriftField, ExactDrift, PerturbationMode, PerturbedDrift, StopReason,
};
use crate::error::Result;
use crate::kernel::distance;
use crate::rng;
use crate::scorematch::drift_l2_error_along_paths;

/// Squared threshold at which a trajectory entering an atom's neighbourhood
/// from distance `from` has, on average, reached distance `to`.
///
/// Near an isolated atom `|b| ≈ (d−2)/ρ` and `log ρ` drifts at rate
/// `−(d−2)/(2ρ²)`, so `∫|b|² ds ≈ 2(d−2) log(from/to)`.
pub fn threshold_for_depth(dim: usize, from: f64, to: f64) -> f64 {
    2.0 * (dim as f64 - 2.0) * (from / to).ln()
}

/// Reverse diffusion under a perturbed drift that hides the support, so the
/// only stopping rule in play is the `∫|b̃|² ≥ M²` threshold. Success means
/// the endpoint is within `δ̃` of an atom inside `B(y, (1+δ) dist(y, 𝓜))`.
pub fn run(ctx: &Context, report: &mut Report) -> Result<()> {
    let p = ctx.params();
    let dim = ctx.dim()?;
    let mut config = ctx.model(dim, ctx.seed_for(3))?;
    let prior = ctx.prior(dim)?;
    let sigma = config.kernel.sigma();
    let runs: usize = p.get_or("runs", 1000)?;
    let delta: f64 = p.get_or("delta", 0.2)?;
    let fraction: f64 = p.get_or("magnitude_fraction", 0.05)?;
    let mode: PerturbationMode = p.get_or("mode", "additive_gaussian_field".to_string())?.parse()?;
    let length_scale: f64 = p.get_or("length_scale", sigma)?;
    let probe_radius: f64 = p.get_or("probe_radius", sigma * (dim as f64).sqrt())?;
    let tube: f64 = p.get_or("tube", 10.0 * config.snap_radius)?;
    let rho_target: f64 = p.get_or("rho_target", 0.5 * config.snap_radius)?;
    let hide: bool = p.get_or("hide_support", true)?;
    let min_success: f64 = p.get_or("min_success", 0.9)?;
    config.record_stride = p.get_or("record_stride", 200)?;
    if !ctx.spec.section("model").has("stop_threshold") {
        config.stop_threshold = threshold_for_depth(dim, probe_radius, rho_target).sqrt();
    }

    let exact = Arc::new(ExactDrift::new(prior.clone(), config.kernel)?);
    let mut r = rng::stream(ctx.seed_for(5), 0);
    let mut min_b = f64::INFINITY;
    for k in 0..64 {
        let u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let atom = prior.atom(k % prior.len());
        let q: Vec<f64> = atom.iter().zip(&u).map(|(x, v)| x + probe_radius * v / un).collect();
        min_b = min_b.min(exact.eval(&q)?.norm_sq().sqrt());
    }
    let magnitude = fraction * min_b;
    let mut field = PerturbedDrift::new(exact.clone(), mode, magnitude, length_scale, ctx.seed_for(6))?;
    if hide {
        field = field.hide_support();
    }

    let mut obs_cfg = config;
    obs_cfg.seed = ctx.seed_for(2);
    let obs = forward_corrupt(&prior, &obs_cfg, runs, ctx.exec)?;
    let starts: Vec<Vec<f64>> = obs.iter().map(|o| o.noisy.clone()).collect();
    let trajectories = reverse_sample_batch(&field, &starts, &config, ctx.exec)?;
    let path_err = drift_l2_error_along_paths(&field, exact.as_ref(), &trajectories, tube)?;

    let mut csv = Csv::new(&[
        "run", "clean_atom", "r", "endpoint_atom", "endpoint_distance", "stop_reason", "steps", "final_l2sq",
        "path_error", "success",
    ]);
    let mut successes = 0;
    let mut threshold_hits = 0;
    for (i, (t, o)) in trajectories.iter().zip(&obs).enumerate() {
        let (_, r0) = prior.nearest(&o.noisy);
        let (j, dj) = prior.nearest(&t.endpoint);
        let ok = dj <= tube && distance(prior.atom(j), &o.noisy) <= (1.0 + delta) * r0;
        successes += ok as usize;
        threshold_hits += (t.stop_reason == StopReason::ThresholdHit) as usize;
        csv.row(&cells![
            i, o.clean_index, r0, j, dj, t.stop_reason, t.steps, t.final_l2sq(), path_err[i], ok as u8
        ]);
    }
    let rate = successes as f64 / runs as f64;
    report.check(rate >= min_success, format!("success rate {rate} below {min_success}"));
    report.add("runs.csv", csv.finish());
    report.add_json(
        "summary.json",
        &json!({
            "d": dim,
            "sigma": sigma,
            "runs": runs,
            "success_rate": rate,
            "threshold_hits": threshold_hits,
            "stop_threshold": config.stop_threshold,
            "perturbation_magnitude": magnitude,
            "min_drift_on_probe_shell": min_b,
            "tube": tube,
            "delta": delta,
            "max_path_error": path_err.iter().copied().fold(0.0, f64::max),
        }),
    );
    report.add(
        "runs.gp",
        "set datafile separator ','\nset logscale y\nset ylabel 'endpoint distance to support'\n\
         plot 'runs.csv' skip 1 using 1:5 with points title 'endpoints'\n",
    );
    Ok(())
}
