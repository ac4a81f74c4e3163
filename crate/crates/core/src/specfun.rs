//! Modified Bessel function of the second kind, `K_ν(z)`, for real `z > 0` and
//! integer or half-integer order, evaluated in the log domain.
//!
//! Everything downstream only ever needs `log K_ν(z)` and the ratio
//! `K_{ν+1}(z) / K_ν(z)`. Both are produced by the upward recurrence on the
//! ratio,
//!
//! ```text
//! r_μ = K_{μ+1}(z) / K_μ(z),     r_μ = 2μ / z + 1 / r_{μ-1},
//! ```
//!
//! which is forward-stable for `K` because every term is positive. The chain is
//! seeded at `μ = 0` (Temme's series for `z ≤ 2`, Steed's continued fraction
//! above) or at `μ = 1/2` (closed form). `log K_ν` is then
//! `log K_{μ₀} + Σ log r_μ`, accumulated as a rescaled running product so that
//! only a handful of logarithms are taken even at `ν ~ 10⁴`.

use crate::error::{Error, Result};

/// Largest supported order.
pub const MAX_ORDER: f64 = 1.0e4;
/// Smallest supported argument.
pub const MIN_ARGUMENT: f64 = 1.0e-8;
/// Largest supported argument.
pub const MAX_ARGUMENT: f64 = 1.0e5;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_SWITCH: f64 = 2.0;
const MAX_ITER: usize = 100_000;
const RESCALE_AT: f64 = 1.0e200;

/// `log K_ν(z)` together with `K_{ν+1}(z) / K_ν(z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselEval {
    pub order: f64,
    pub argument: f64,
    pub log_k: f64,
    pub ratio_up: f64,
}

/// Checks the order is a non-negative multiple of 1/2 and returns `2ν`.
fn twice_order(order: f64) -> Result<u32> {
    if !order.is_finite() || order < 0.0 {
        return Err(Error::Domain(format!("order must be finite and >= 0, got {order}")));
    }
    let twice = 2.0 * order;
    if twice.fract() != 0.0 {
        return Err(Error::Domain(format!(
            "order must be an integer or half-integer, got {order}"
        )));
    }
    Ok(twice as u32)
}

fn check_inputs(order: f64, z: f64) -> Result<u32> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Domain(format!("argument must be > 0, got {z}")));
    }
    let twice = twice_order(order)?;
    if order > MAX_ORDER {
        return Err(Error::Range {
            order,
            argument: z,
            reason: "order above the supported maximum 1e4",
        });
    }
    if !(MIN_ARGUMENT..=MAX_ARGUMENT).contains(&z) {
        return Err(Error::Range {
            order,
            argument: z,
            reason: "argument outside the supported interval [1e-8, 1e5]",
        });
    }
    Ok(twice)
}

/// Temme's series for `(K_0(x), K_1(x))`, `0 < x ≤ 2`.
fn k01_series(x: f64) -> (f64, f64) {
    let half = 0.5 * x;
    let mut ff = -half.ln() - EULER_GAMMA;
    let mut sum = ff;
    let mut p = 0.5;
    let mut q = 0.5;
    let mut c = 1.0;
    let quarter_sq = half * half;
    let mut sum1 = p;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi);
        c *= quarter_sq / fi;
        p /= fi;
        q /= fi;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * f64::EPSILON && del1.abs() < sum1.abs() * f64::EPSILON {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

/// Steed's continued fraction for `(log K_0(x), K_1(x)/K_0(x))`, `x > 2`.
fn k01_continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    h *= a1;
    let log_k0 = 0.5 * (std::f64::consts::PI / (2.0 * x)).ln() - x - s.ln();
    (log_k0, (x + 0.5 - h) / x)
}

/// Seed of the recurrence: `(μ₀, log K_{μ₀}(z), K_{μ₀+1}/K_{μ₀})`.
fn seed(half_integer: bool, z: f64) -> (f64, f64, f64) {
    if half_integer {
        let log_k = 0.5 * (std::f64::consts::PI / (2.0 * z)).ln() - z;
        (0.5, log_k, 1.0 + 1.0 / z)
    } else if z <= SERIES_SWITCH {
        let (k0, k1) = k01_series(z);
        (0.0, k0.ln(), k1 / k0)
    } else {
        let (log_k0, ratio) = k01_continued_fraction(z);
        (0.0, log_k0, ratio)
    }
}

/// Evaluates `log K_ν(z)` and `K_{ν+1}(z)/K_ν(z)` in one pass.
pub fn bessel_k(order: f64, z: f64) -> Result<BesselEval> {
    let twice = check_inputs(order, z)?;
    let (mu0, log_k0, mut ratio) = seed(twice % 2 == 1, z);
    let steps = ((order - mu0).round()) as u32;

    let mut acc = log_k0;
    let mut prod = 1.0;
    let mut mu = mu0;
    for _ in 0..steps {
        prod *= ratio;
        if prod > RESCALE_AT {
            acc += prod.ln();
            prod = 1.0;
        }
        mu += 1.0;
        ratio = 2.0 * mu / z + 1.0 / ratio;
    }
    let log_k = acc + prod.ln();
    if !log_k.is_finite() || !ratio.is_finite() {
        return Err(Error::Range {
            order,
            argument: z,
            reason: "intermediate scaling overflowed",
        });
    }
    Ok(BesselEval {
        order,
        argument: z,
        log_k,
        ratio_up: ratio,
    })
}

/// `log K_ν(z)`.
pub fn log_bessel_k(order: f64, z: f64) -> Result<f64> {
    bessel_k(order, z).map(|e| e.log_k)
}

/// `K_{ν+1}(z) / K_ν(z)`, without forming either function at order `ν`.
pub fn bessel_k_ratio(order: f64, z: f64) -> Result<f64> {
    let twice = check_inputs(order, z)?;
    let (mu0, _, mut ratio) = seed(twice % 2 == 1, z);
    let steps = ((order - mu0).round()) as u32;
    let mut mu = mu0;
    for _ in 0..steps {
        mu += 1.0;
        ratio = 2.0 * mu / z + 1.0 / ratio;
    }
    Ok(ratio)
}

/// Leading-order large-order form
/// `log[√(π/(2ν)) (2ν/e)^ν z^{-ν}]`, valid for `z = o(ν)`.
///
/// Diagnostic only: it is never substituted for [`log_bessel_k`]. Outside
/// the `z ≪ ν` regime (e.g. `ν = 50, z = 40`) it carries no accuracy promise.
pub fn log_bessel_k_large_order(order: f64, z: f64) -> Result<f64> {
    if !order.is_finite() || order <= 0.0 {
        return Err(Error::Domain(format!("order must be > 0, got {order}")));
    }
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Domain(format!("argument must be > 0, got {z}")));
    }
    let two_nu = 2.0 * order;
    Ok(0.5 * (std::f64::consts::PI / two_nu).ln() + order * (two_nu.ln() - 1.0) - order * z.ln())
}

/// Slow quadrature of `K_ν(z) = ∫₀^∞ exp(-z cosh t) cosh(νt) dt`.
///
/// Shares nothing with the recurrence path and is used by the audit as a
/// second route. The trapezoidal rule on this even, entire integrand
/// converges geometrically in the step.
pub mod reference {
    use crate::error::{Error, Result};

    fn log_integrand(order: f64, z: f64, t: f64) -> f64 {
        let nt = order * t;
        -z * t.cosh() + nt + (-2.0 * nt).exp().ln_1p() - std::f64::consts::LN_2
    }

    /// `log K_ν(z)` by trapezoidal quadrature; `steps_per_width` controls
    /// the grid density relative to the saddle width.
    pub fn log_bessel_k_quadrature(order: f64, z: f64, steps_per_width: f64) -> Result<f64> {
        if !(order >= 0.0) || !(z > 0.0) {
            return Err(Error::Domain(format!("quadrature needs order >= 0 and z > 0, got ({order}, {z})")));
        }
        let saddle = (order / z).asinh();
        let width = (1.0 / (z * saddle.cosh()).sqrt()).min(1.0);
        let peak = log_integrand(order, z, saddle);
        let cutoff = peak - 45.0;

        let mut hi = saddle;
        while log_integrand(order, z, hi) > cutoff {
            hi += width;
        }
        let mut lo = saddle;
        while lo > 0.0 && log_integrand(order, z, lo) > cutoff {
            lo -= width;
        }
        let from_origin = lo <= 0.0;
        let lo = lo.max(0.0);

        let h = width / steps_per_width;
        let n = ((hi - lo) / h).ceil() as usize;
        let mut sum = 0.0;
        for k in 0..=n {
            let t = lo + k as f64 * h;
            let w = if k == 0 && from_origin { 0.5 } else { 1.0 };
            sum += w * (log_integrand(order, z, t) - peak).exp();
        }
        Ok(peak + (sum * h).ln())
    }
}
