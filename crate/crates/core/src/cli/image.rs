use rand::Rng as _;
use serde_json::json;

use super::{Context, Csv, Report};
use crate::cells;
use crate::dynamics::{corrupt_point, reverse_sample_with, ExactDrift, Trajectory};
use crate::error::{Error, Result};
use crate::prior::{discretize, load_idx, load_prior, EmpiricalPrior, ImageGrid};
use crate::rng;

/// Smooth stroke intensity at distance `dist` from the pen path.
fn ink(dist: f64, width: f64) -> f64 {
    (-0.5 * (dist / width).powi(2)).exp()
}

/// Two digit-like classes rendered at resolution `2^(k+2)` and block-averaged
/// down to `2^k`: class 0 a ring, class 1 a slanted stroke with a top bar.
/// Each atom jitters position and size.
pub(crate) fn synthetic_digits(k: u32, n: usize, jitter: f64, seed: u64) -> Result<(Vec<ImageGrid>, Vec<String>)> {
    let mut r = rng::stream(seed, 0);
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let (cx, cy) = (0.5 + jitter * r.random_range(-1.0..1.0), 0.5 + jitter * r.random_range(-1.0..1.0));
        let size = 0.3 * (1.0 + jitter * r.random_range(-1.0..1.0));
        let width = 0.06;
        let fine = ImageGrid::from_fn(k + 2, |u, v| {
            let (x, y) = (v - cx, u - cy);
            match class {
                0 => ink(((x * x + y * y).sqrt() - size).abs(), width),
                _ => {
                    // Segment from (size, -size) to (-size/2, size), plus a bar along y = -size.
                    let (ax, ay, bx, by) = (size, -size, -0.5 * size, size);
                    let t = (((x - ax) * (bx - ax) + (y - ay) * (by - ay)) / ((bx - ax).powi(2) + (by - ay).powi(2)))
                        .clamp(0.0, 1.0);
                    let d1 = ((x - ax - t * (bx - ax)).powi(2) + (y - ay - t * (by - ay)).powi(2)).sqrt();
                    let d2 = if x.abs() <= size { (y + size).abs() } else { f64::INFINITY };
                    ink(d1.min(d2), width)
                }
            }
        });
        images.push(discretize(&fine, k)?);
        labels.push(class.to_string());
    }
    Ok((images, labels))
}

fn grid_csv(pixels: &[f64], side: usize) -> String {
    let mut out = String::new();
    for row in pixels.chunks_exact(side) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// States at accumulated-`ℓ²` fractions `j/(K+1)`, `j = 1..K`.
fn snapshots(t: &Trajectory, count: usize) -> Vec<&[f64]> {
    let total = t.final_l2sq();
    (1..=count)
        .map(|j| {
            let level = total * j as f64 / (count + 1) as f64;
            let s = t
                .states
                .iter()
                .find(|s| s.accumulated_l2sq >= level)
                .unwrap_or_else(|| t.states.last().expect("trajectories are never empty"));
            s.point.as_slice()
        })
        .collect()
}

pub fn run(ctx: &Context, report: &mut Report) -> Result<()> {
    let p = ctx.params();
    let pr = ctx.spec.section("prior");
    let k: u32 = p.get_or("resolution_log2", 3)?;
    if k > 4 {
        return Err(Error::invalid("resolution_log2", "desk scale: at most 4 (16×16)"));
    }
    let side = 1usize << k;
    let dim = side * side;
    let runs: usize = p.get_or("runs", 100)?;
    let count: usize = p.get_or("snapshots", 4)?;
    let corruption: String = p.get_or("corruption", "left_half".to_string())?;
    let min_correct: f64 = p.get_or("min_correct", 0.9)?;

    let source: String = pr.get_or("source", "images".to_string())?;
    let n: usize = pr.get_or("n", 40)?;
    if n == 0 || n > 2000 {
        return Err(Error::invalid("n", "desk scale: between 1 and 2000 atoms"));
    }
    let prior = match source.as_str() {
        "images" => {
            let jitter: f64 = pr.get_or("jitter", 0.05)?;
            let seed = pr.get_or("seed", ctx.seed_for(1))?;
            let (images, labels) = synthetic_digits(k, n, jitter, seed)?;
            let flat: Vec<f64> = images.into_iter().flat_map(ImageGrid::into_pixels).collect();
            EmpiricalPrior::from_flat(dim, flat, "synthetic digits")?.with_labels(labels)?
        }
        "idx" => {
            let path: String = pr.require("path")?;
            let images = load_idx(ctx.resolve(&path))?;
            let flat = images
                .iter()
                .take(n)
                .map(|g| discretize(g, k).map(ImageGrid::into_pixels))
                .collect::<Result<Vec<_>>>()?
                .concat();
            EmpiricalPrior::from_flat(dim, flat, format!("idx:{path}"))?
        }
        "file" => {
            let path: String = pr.require("path")?;
            load_prior(ctx.resolve(&path))?
        }
        other => return Err(Error::invalid("source", format!("unknown image source `{other}`"))),
    };
    if prior.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: prior.dim(),
        });
    }
    let config = ctx.model(dim, ctx.seed_for(3))?;
    let field = ExactDrift::new(prior.clone(), config.kernel)?;

    let results = crate::par::try_map_indexed(ctx.exec, runs, |i| {
        let mut r = rng::stream(ctx.seed_for(2), i as u64);
        let target = r.random_range(0..prior.len());
        let clean = prior.atom(target);
        let y: Vec<f64> = match corruption.as_str() {
            "left_half" => clean
                .iter()
                .enumerate()
                .map(|(idx, &v)| if idx % side < side / 2 { r.random::<f64>() } else { v })
                .collect(),
            "forward" => corrupt_point(clean, config.kernel.sigma(), &mut r)?.0,
            other => return Err(Error::invalid("corruption", format!("unknown corruption `{other}`"))),
        };
        let mut c = config;
        c.record_stride = if i == 0 { 1 } else { 0 };
        let t = reverse_sample_with(&field, &y, &c, &mut rng::stream(config.seed, i as u64))?;
        Ok((target, y, t))
    })?;

    let mut csv = Csv::new(&[
        "run", "target_atom", "target_label", "snapped_atom", "snapped_label", "correct", "max_pixel_deviation",
        "stop_reason", "steps",
    ]);
    let mut correct = 0;
    let labelled = prior.labels().is_some();
    for (i, (target, _, t)) in results.iter().enumerate() {
        let atom = t.endpoint_snapped.unwrap_or_else(|| prior.nearest(&t.endpoint).0);
        let dev = t
            .endpoint
            .iter()
            .zip(prior.atom(atom))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let same = prior.label(atom) == prior.label(*target);
        correct += same as usize;
        csv.row(&cells![
            i,
            target,
            prior.label(*target).unwrap_or(""),
            t.endpoint_snapped.map_or(String::new(), |a| a.to_string()),
            prior.label(atom).unwrap_or(""),
            same as u8,
            dev,
            t.stop_reason,
            t.steps
        ]);
    }
    let rate = correct as f64 / runs.max(1) as f64;
    if labelled && runs > 0 {
        report.check(rate >= min_correct, format!("class recovery rate {rate} below {min_correct}"));
    }
    report.add("runs.csv", csv.finish());

    if let Some((_, y, t)) = results.first() {
        report.add("corrupted.csv", grid_csv(y, side));
        for (j, s) in snapshots(t, count).into_iter().enumerate() {
            report.add(format!("snapshot_{:02}.csv", j + 1), grid_csv(s, side));
        }
        report.add("endpoint.csv", grid_csv(&t.endpoint, side));
    }
    report.add_json(
        "summary.json",
        &json!({
            "d": dim,
            "atoms": prior.len(),
            "runs": runs,
            "corruption": corruption,
            "class_recovery_rate": if labelled { json!(rate) } else { json!(null) },
            "snapshots": count,
        }),
    );
    report.add(
        "image.gp",
        "set datafile separator ','\nset view map\nset yrange [*:*] reverse\n\
         plot 'endpoint.csv' matrix with image title 'endpoint'\n",
    );
    Ok(())
}
