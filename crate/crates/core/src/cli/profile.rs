use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use super::{Context, Csv, Report};
use crate::cells;
use crate::dynamics::{DriftField, ExactDrift, LeadingOrderDrift};
use crate::error::Result;
use crate::kernel::distance;
use crate::rng;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact against leading-order drift at probes `atom + ρ·u`, and `|b|`
/// against `(d−2)/dist`.
pub fn run(ctx: &Context, report: &mut Report) -> Result<()> {
    let p = ctx.params();
    let dim = ctx.dim()?;
    let config = ctx.model(dim, ctx.seed)?;
    let sigma = config.kernel.sigma();
    let prior = ctx.prior(dim)?;
    let probes: usize = p.get_or("probes", 100)?;
    let radii: Vec<f64> = p
        .list("radii")?
        .unwrap_or_else(|| vec![0.5 * sigma, sigma, 2.0 * sigma, 4.0 * sigma]);
    let max_rel: Option<f64> = p.get("max_rel_error")?;
    let max_norm: Option<f64> = p.get("max_norm_ratio_error")?;

    let exact = ExactDrift::new(prior.clone(), config.kernel)?;
    let leading = LeadingOrderDrift::new(prior.clone(), config.kernel)?;
    let mut r = rng::stream(ctx.seed_for(4), 0);
    let mut csv = Csv::new(&[
        "probe", "atom", "rho", "nearest_distance", "exact_norm", "leading_norm", "rel_vector_error",
        "distance_estimate", "norm_ratio",
    ]);
    let (mut worst_rel, mut worst_norm) = (0.0f64, 0.0f64);
    for i in 0..probes {
        let atom = r.random_range(0..prior.len());
        let rho = radii[i % radii.len()];
        let u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        let un = norm(&u);
        let y: Vec<f64> = prior.atom(atom).iter().zip(&u).map(|(x, v)| x + rho * v / un).collect();
        let e = exact.eval(&y)?;
        let l = leading.eval(&y)?.drift;
        let diff: Vec<f64> = e.drift.iter().zip(&l).map(|(a, b)| a - b).collect();
        let bn = norm(&e.drift);
        let rel = norm(&diff) / bn;
        let near = prior.atoms().map(|a| distance(a, &y)).fold(f64::INFINITY, f64::min);
        let ratio = bn * near / (dim as f64 - 2.0);
        worst_rel = worst_rel.max(rel);
        worst_norm = worst_norm.max((ratio - 1.0).abs());
        csv.row(&cells![i, atom, rho, near, bn, norm(&l), rel, e.distance_estimate, ratio]);
    }
    if let Some(m) = max_rel {
        report.check(worst_rel <= m, format!("leading-order relative error {worst_rel} exceeds {m}"));
    }
    if let Some(m) = max_norm {
        report.check(worst_norm <= m, format!("|b|·dist/(d−2) deviates from 1 by {worst_norm} > {m}"));
    }
    report.add("drift_profile.csv", csv.finish());
    report.add_json(
        "summary.json",
        &json!({
            "d": dim,
            "sigma": sigma,
            "probes": probes,
            "max_rel_vector_error": worst_rel,
            "max_norm_ratio_error": worst_norm,
        }),
    );
    report.add(
        "drift_profile.gp",
        "set datafile separator ','\nset xlabel 'nearest distance'\nset ylabel 'relative error'\n\
         plot 'drift_profile.csv' skip 1 using 4:7 with points title 'leading order vs exact'\n",
    );
    Ok(())
}
