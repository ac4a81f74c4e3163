use std::collections::BTreeMap;

use serde_json::json;

use super::{Context, Csv, Report};
use crate::cells;
use crate::dynamics::{corrupt_point, reverse_sample_batch, ExactDrift};
use crate::error::{Error, Result};
use crate::posterior::posterior_weights;
use crate::rng;

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Snapped endpoints of the reverse diffusion against the closed-form
/// posterior for one observation.
pub fn run(ctx: &Context, report: &mut Report) -> Result<()> {
    let p = ctx.params();
    let dim = ctx.dim()?;
    let mut config = ctx.model(dim, ctx.seed_for(3))?;
    config.record_stride = 0;
    let prior = ctx.prior(dim)?;
    let trajectories: usize = p.get_or("trajectories", 10_000)?;
    let tolerance: f64 = p.get_or("tv_tolerance", 0.05)?;
    let y = match p.list::<f64>("observation")? {
        Some(y) => y,
        None => {
            let mut r = rng::stream(ctx.seed_for(2), 0);
            let atom: usize = p.get_or("observation_atom", 0)?;
            if atom >= prior.len() {
                return Err(Error::invalid("observation_atom", "out of range"));
            }
            corrupt_point(prior.atom(atom), config.kernel.sigma(), &mut r)?.0
        }
    };
    prior.check_point(&y)?;

    let w = posterior_weights(&prior, &config.kernel, &y)?.weights();
    let field = ExactDrift::new(prior.clone(), config.kernel)?;
    let runs = reverse_sample_batch(&field, &vec![y.clone(); trajectories], &config, ctx.exec)?;

    let mut counts = vec![0usize; prior.len()];
    let mut unsnapped = 0;
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for t in &runs {
        *reasons.entry(t.stop_reason.to_string()).or_default() += 1;
        match t.endpoint_snapped {
            Some(i) => counts[i] += 1,
            None => unsnapped += 1,
        }
    }
    // Unsnapped runs count against the sampler: they carry no atom mass.
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / trajectories as f64).collect();
    let tv = total_variation(&w, &empirical) + 0.5 * unsnapped as f64 / trajectories as f64;
    report.check(tv <= tolerance, format!("tv distance {tv} exceeds {tolerance}"));

    let mut csv = Csv::new(&["atom", "posterior", "empirical", "count"]);
    for i in 0..prior.len() {
        csv.row(&cells![i, w[i], empirical[i], counts[i]]);
    }
    report.add("histogram.csv", csv.finish());
    report.add_json(
        "summary.json",
        &json!({
            "tv_distance": tv,
            "tv_tolerance": tolerance,
            "trajectories": trajectories,
            "unsnapped": unsnapped,
            "stop_reasons": reasons,
            "observation": y,
            "posterior": w,
            "empirical": empirical,
            "mean_steps": runs.iter().map(|t| t.steps as f64).sum::<f64>() / trajectories as f64,
        }),
    );
    report.add(
        "histogram.gp",
        "set datafile separator ','\nset style data histograms\nset style fill solid 0.5\n\
         plot 'histogram.csv' skip 1 using 2:xtic(1) title 'posterior', '' skip 1 using 3 title 'reverse SDE'\n",
    );
    Ok(())
}
