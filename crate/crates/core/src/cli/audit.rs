use std::f64::consts::PI;

use rand::Rng as _;
use serde::Serialize;
use serde_json::json;

use super::{Context, Csv, Report};
use crate::cells;
use crate::error::Result;
use crate::rng;
use crate::specfun::{self, reference};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub check: &'static str,
    pub order: f64,
    pub argument: f64,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `K_{n+1/2}(z) = √(π/2z) e^{−z} Σ_k (n+k)!/(k!(n−k)!) (2z)^{−k}`.
fn closed_half(order: f64, z: f64) -> f64 {
    let n = (order - 0.5) as u64;
    let mut s = 0.0;
    for k in 0..=n {
        let mut c = 1.0;
        for j in (n - k + 1)..=(n + k) {
            c *= j as f64;
        }
        for j in 1..=k {
            c /= j as f64;
        }
        s += c / (2.0 * z).powi(k as i32);
    }
    0.5 * (PI / (2.0 * z)).ln() - z + s.ln()
}

fn row(check: &'static str, order: f64, argument: f64, value: f64, reference: f64, tol: f64) -> AuditRow {
    let error = (value - reference).abs();
    let tolerance = tol * reference.abs().max(1.0);
    AuditRow {
        check,
        order,
        argument,
        value,
        reference,
        error,
        tolerance,
        pass: error <= tolerance,
    }
}

/// Closed forms for `ν ∈ {1/2, 3/2, 5/2, 7/2}` at 1e−12, then `samples`
/// random `(ν, z)` against trapezoidal quadrature at 1e−10, plus the
/// three-term recurrence at 1e−8.
pub fn audit_specfun(samples: usize, seed: u64) -> Result<Vec<AuditRow>> {
    let mut rows = Vec::new();
    for order in [0.5, 1.5, 2.5, 3.5] {
        for z in [0.1, 1.0, 10.0, 100.0] {
            rows.push(row("closed_form", order, z, specfun::log_bessel_k(order, z)?, closed_half(order, z), 1e-12));
        }
    }
    let mut r = rng::stream(seed, 0);
    for _ in 0..samples {
        let order = r.random_range(0..=20_000u32) as f64 / 2.0;
        let z = 10f64.powf(r.random_range(-6.0..4.0));
        let value = specfun::log_bessel_k(order, z)?;
        rows.push(row("quadrature", order, z, value, reference::log_bessel_k_quadrature(order, z, 8.0)?, 1e-10));
        if order >= 1.0 {
            // K_{ν+1} = K_{ν−1} + (2ν/z) K_ν, scaled by K_ν.
            let e = specfun::bessel_k(order, z)?;
            let below = specfun::log_bessel_k(order - 1.0, z)?;
            let rhs = (below - e.log_k).exp() + 2.0 * order / z;
            rows.push(row("recurrence", order, z, e.ratio_up, rhs, 1e-8));
        }
    }
    Ok(rows)
}

pub fn run(ctx: &Context, report: &mut Report) -> Result<()> {
    let samples: usize = ctx.params().get_or("samples", 50)?;
    let rows = audit_specfun(samples, ctx.seed)?;
    let mut csv = Csv::new(&["check", "order", "argument", "value", "reference", "error", "tolerance", "pass"]);
    for r in &rows {
        csv.row(&cells![r.check, r.order, r.argument, r.value, r.reference, r.error, r.tolerance, r.pass as u8]);
        report.check(
            r.pass,
            format!("{} check failed at ν={}, z={}: error {:e} > {:e}", r.check, r.order, r.argument, r.error, r.tolerance),
        );
    }
    report.add("specfun_audit.csv", csv.finish());
    report.add_json(
        "summary.json",
        &json!({
            "rows": rows.len(),
            "failures": rows.iter().filter(|r| !r.pass).count(),
            "max_relative_error": rows.iter().map(|r| r.error / r.reference.abs().max(1.0)).fold(0.0, f64::max),
        }),
    );
    Ok(())
}
