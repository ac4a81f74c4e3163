use rand_distr::{Distribution, StandardNormal, Uniform};
use serde_json::json;

use super::{Context, Csv, Report};
use crate::cells;
use crate::dynamics::corrupt_point;
use crate::error::{Error, Result};
use crate::posterior::{concentration_bound, concentration_certificate, Certificate};
use crate::prior::EmpiricalPrior;
use crate::rng;

fn unit(r: &mut rng::Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(r)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Observation at the origin, one atom at distance `(1−gap)r` and `1/ε − 1`
/// atoms just outside `(1+δ)r`, in random directions. The ball `B(0, r)` then
/// has empirical mass exactly `ε`.
pub(crate) fn shell_fixture(
    dim: usize,
    epsilon: f64,
    delta: f64,
    r: f64,
    gap: f64,
    rng: &mut rng::Rng,
) -> Result<(EmpiricalPrior, Vec<f64>)> {
    let n = (1.0 / epsilon).round() as usize;
    if n == 0 || ((1.0 / n as f64) - epsilon).abs() > 1e-9 {
        return Err(Error::invalid("epsilon", "must be the reciprocal of a positive integer"));
    }
    let spread = Uniform::new(0.0, 1.0).expect("valid range");
    let inner = r * (1.0 - gap);
    let mut points = vec![unit(rng, dim).into_iter().map(|x| inner * x).collect::<Vec<_>>()];
    for _ in 1..n {
        let radius = (1.0 + delta) * r * (1.0 + gap * (1.0 + spread.sample(rng)));
        points.push(unit(rng, dim).into_iter().map(|x| radius * x).collect());
    }
    Ok((EmpiricalPrior::from_points(&points, "shell fixture")?, vec![0.0; dim]))
}

pub fn run(ctx: &Context, report: &mut Report) -> Result<()> {
    let p = ctx.params();
    let dims: Vec<usize> = p.list("dims")?.unwrap_or_else(|| vec![10, 50, 100, 200]);
    let epsilon: f64 = p.get_or("epsilon", 0.1)?;
    let delta: f64 = p.get_or("delta", 0.1)?;
    let radius: f64 = p.get_or("r", 1.0)?;
    let gap: f64 = p.get_or("gap", 0.05)?;
    let fixture: String = p.get_or("fixture", "shell".to_string())?;
    let off_limit: Option<f64> = p.get("off_mass_limit")?;
    let off_dim: usize = p.get_or("off_mass_dim", dims.iter().copied().max().unwrap_or(0))?;

    let mut csv = Csv::new(&[
        "rep", "d", "sigma", "epsilon", "delta", "r", "lhs_mass", "rhs_bound", "margin", "off_mass",
    ]);
    let mut rows: Vec<Certificate> = Vec::new();
    for &d in &dims {
        let config = ctx.model(d, ctx.seed)?;
        for rep in 0..ctx.repetitions {
            let mut r = rng::stream(ctx.seed_for(d as u64), rep as u64);
            let (prior, y, ball) = match fixture.as_str() {
                "shell" => {
                    let (prior, y) = shell_fixture(d, epsilon, delta, radius, gap, &mut r)?;
                    (prior, y, radius)
                }
                "prior" => {
                    let prior = ctx.prior(d)?;
                    let (y, _, _) = corrupt_point(prior.atom(rep % prior.len()), config.kernel.sigma(), &mut r)?;
                    let (_, near) = prior.nearest(&y);
                    (prior, y, near)
                }
                other => return Err(Error::invalid("fixture", format!("unknown fixture `{other}`"))),
            };
            let c = concentration_certificate(&prior, &config.kernel, &y, ball, delta)?;
            report.check(
                c.holds(),
                format!("certificate margin {} < -1e-12 at d={d}, rep={rep}", c.margin),
            );
            if let Some(limit) = off_limit {
                if d == off_dim {
                    report.check(
                        c.off_mass <= limit,
                        format!("off-ball mass {} exceeds {limit} at d={d}, rep={rep}", c.off_mass),
                    );
                }
            }
            csv.row(&cells![rep, d, c.sigma, c.epsilon_used, delta, c.r, c.lhs_mass, c.rhs_bound, c.margin, c.off_mass]);
            rows.push(c);
        }
    }
    report.add("concentration.csv", csv.finish());
    report.add_json(
        "concentration.json",
        &json!({
            "rows": rows,
            "bounds": dims.iter().map(|&d| json!({
                "d": d,
                "rhs_bound_at_epsilon": concentration_bound(d, epsilon, delta),
            })).collect::<Vec<_>>(),
        }),
    );
    report.add(
        "concentration.gp",
        "set datafile separator ','\nset logscale y\nset xlabel 'd'\nset ylabel 'off-ball posterior mass'\n\
         plot 'concentration.csv' skip 1 using 2:10 with points title 'off mass'\n",
    );
    Ok(())
}
