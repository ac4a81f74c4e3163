use std::sync::Arc;

use polar_denoise::dynamics::{
    corrupt_point, exp_time_identity_check, forward_corrupt, reverse_sample, reverse_sample_batch, DriftField, ExactDrift,
    LeadingOrderDrift, ModelConfig, PathSample, PerturbationMode, PerturbedDrift, StopReason, ZeroDrift,
};
use polar_denoise::kernel::{distance, KernelParams};
use polar_denoise::par::Exec;
use polar_denoise::posterior::posterior_weights;
use polar_denoise::prior::{generate_synthetic, read_records, EmpiricalPrior, ShapeParams, SyntheticKind};
use polar_denoise::rng;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit(r: &mut rng::Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(r)).collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

fn single_atom(dim: usize) -> EmpiricalPrior {
    EmpiricalPrior::from_points(&[vec![0.0; dim]], "origin").unwrap()
}

fn two_point(dim: usize, separation: f64) -> EmpiricalPrior {
    let shape = ShapeParams::from([("separation".to_string(), separation)]);
    generate_synthetic(SyntheticKind::TwoPoint, dim, 2, 0, &shape).unwrap()
}

fn point_at(dim: usize, coords: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; dim];
    y[..coords.len()].copy_from_slice(coords);
    y
}

#[test]
fn zero_noise_returns_clean() {
    let mut r = rng::stream(1, 0);
    let clean = [1.0, -2.0, 0.5, 3.0, 0.0];
    for _ in 0..50 {
        assert_eq!(corrupt_point(&clean, 0.0, &mut r).unwrap().0, clean);
    }
}

#[test]
fn forward_second_moment() {
    let (dim, sigma, n) = (100, 0.3, 100_000);
    let prior = two_point(dim, 2.0);
    let cfg = ModelConfig::new(KernelParams::new(dim, sigma).unwrap(), 5);
    let sq: Vec<f64> = forward_corrupt(&prior, &cfg, n, Exec::default())
        .unwrap()
        .iter()
        .map(|s| distance(&s.noisy, &s.clean).powi(2))
        .collect();
    let mean = sq.iter().sum::<f64>() / n as f64;
    let sd = (sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let want = sigma * sigma * dim as f64;
    assert!((mean - want).abs() <= 3.0 * sd / (n as f64).sqrt(), "{mean} vs {want}");
}

#[test]
fn forward_radial_law() {
    let (dim, sigma) = (6, 0.5);
    let cfg = ModelConfig::new(KernelParams::new(dim, sigma).unwrap(), 8);
    let mut got: Vec<f64> = forward_corrupt(&single_atom(dim), &cfg, 100_000, Exec::default())
        .unwrap()
        .iter()
        .map(|s| norm(&s.noisy).powi(2) / (sigma * sigma))
        .collect();
    // Reference: U·χ²_d drawn independently of the crate.
    let mut r = rng::stream(99, 0);
    let mut reference: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let u: f64 = Exp1.sample(&mut r);
            u * (0..dim).map(|_| r.sample::<f64, _>(StandardNormal).powi(2)).sum::<f64>()
        })
        .collect();
    got.sort_by(f64::total_cmp);
    reference.sort_by(f64::total_cmp);
    let mut ks = 0.0f64;
    let mut j = 0;
    for (i, x) in got.iter().enumerate() {
        while j < reference.len() && reference[j] <= *x {
            j += 1;
        }
        let fg = (i + 1) as f64 / got.len() as f64;
        let fr = j as f64 / reference.len() as f64;
        ks = ks.max((fg - fr).abs()).max((i as f64 / got.len() as f64 - fr).abs());
    }
    assert!(ks <= 0.01, "KS distance {ks}");
}

#[test]
fn single_atom_drift_points_home() {
    let k = KernelParams::new(400, 1.0).unwrap();
    let f = ExactDrift::new(single_atom(400), k).unwrap();
    let mut r = rng::stream(3, 0);
    let u = unit(&mut r, 400);
    let y: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
    let e = f.eval(&y).unwrap();
    let bn = norm(&e.drift);
    let cos = -e.drift.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / bn;
    assert!((cos - 1.0).abs() < 1e-12);
    let ratio = bn / (398.0 / 2.0);
    assert!((0.99..=1.01).contains(&ratio), "{ratio}");
    let g = polar_denoise::kernel::grad2_log_green(&k, &[0.0; 400], &y).unwrap();
    for (a, b) in e.drift.iter().zip(&g) {
        assert!((a - b).abs() <= 1e-12 * bn);
    }
}

#[test]
fn reflection_symmetry() {
    let prior = two_point(10, 2.0);
    let f = ExactDrift::new(prior, KernelParams::new(10, 1.0).unwrap()).unwrap();
    let mut r = rng::stream(4, 0);
    for _ in 0..20 {
        let mut y: Vec<f64> = (0..10).map(|_| r.random_range(-2.0..2.0)).collect();
        y[0] = 0.0;
        let b = f.eval(&y).unwrap().drift;
        assert!(b[0].abs() < 1e-10, "{}", b[0]);
    }
}

#[test]
fn weights_normalised_and_gradient_consistent() {
    let prior = generate_synthetic(SyntheticKind::ClusterMixture, 12, 9, 2, &ShapeParams::new()).unwrap();
    let f = ExactDrift::new(prior, KernelParams::new(12, 0.8).unwrap()).unwrap();
    let mut r = rng::stream(6, 0);
    for _ in 0..10 {
        let y: Vec<f64> = (0..12).map(|_| r.random_range(-1.5..1.5)).collect();
        let (e, w) = f.eval_with_weights(&y).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|x| x.is_finite()));
        let h = 1e-6;
        for i in 0..12 {
            let mut up = y.clone();
            let mut dn = y.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (f.eval(&up).unwrap().log_h - f.eval(&dn).unwrap().log_h) / (2.0 * h);
            assert!((e.drift[i] - fd).abs() <= 1e-5 * e.drift[i].abs().max(1.0), "{} vs {fd}", e.drift[i]);
        }
    }
}

#[test]
fn leading_order_single_atom_and_high_dimension() {
    let k = KernelParams::new(10, 1.0).unwrap();
    let f = LeadingOrderDrift::new(single_atom(10), k).unwrap();
    let y = point_at(10, &[0.5, -1.0, 0.25]);
    let r2: f64 = y.iter().map(|x| x * x).sum();
    let want: Vec<f64> = y.iter().map(|x| -10.0 * x / r2).collect();
    for (a, b) in f.eval(&y).unwrap().drift.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }

    let dim = 1000;
    let k = KernelParams::new(dim, 1.0).unwrap();
    let prior = generate_synthetic(SyntheticKind::ClusterMixture, dim, 5, 7, &ShapeParams::new()).unwrap();
    let exact = ExactDrift::new(prior.clone(), k).unwrap();
    let lead = LeadingOrderDrift::new(prior.clone(), k).unwrap();
    let mut r = rng::stream(8, 0);
    for i in 0..20 {
        let u = unit(&mut r, dim);
        let y: Vec<f64> = prior.atom(i % 5).iter().zip(&u).map(|(a, b)| a + 1.5 * b).collect();
        let e = exact.eval(&y).unwrap().drift;
        let l = lead.eval(&y).unwrap().drift;
        let diff: Vec<f64> = e.iter().zip(&l).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) / norm(&e) <= 0.01);
    }
}

#[test]
fn perturbation_contract() {
    let dim = 8;
    let base: Arc<dyn DriftField> = Arc::new(ExactDrift::new(two_point(dim, 2.0), KernelParams::new(dim, 1.0).unwrap()).unwrap());
    let mut r = rng::stream(10, 0);
    let probes: Vec<Vec<f64>> = (0..1000).map(|_| (0..dim).map(|_| r.random_range(-3.0..3.0)).collect()).collect();

    let zero = PerturbedDrift::new(base.clone(), PerturbationMode::AdditiveGaussianField, 0.0, 1.0, 1).unwrap();
    for y in &probes[..50] {
        assert_eq!(zero.eval(y).unwrap(), base.eval(y).unwrap());
    }
    let m = 0.3;
    let a = PerturbedDrift::new(base.clone(), PerturbationMode::AdditiveGaussianField, m, 1.0, 1).unwrap();
    let b = PerturbedDrift::new(base.clone(), PerturbationMode::AdditiveGaussianField, m, 1.0, 2).unwrap();
    let mut sup = 0.0f64;
    let mut apart = 0.0f64;
    for y in &probes {
        let (ea, eb, e0) = (a.eval(y).unwrap(), b.eval(y).unwrap(), base.eval(y).unwrap());
        let d: Vec<f64> = ea.drift.iter().zip(&e0.drift).map(|(x, z)| x - z).collect();
        sup = sup.max(norm(&d));
        apart = apart.max(norm(&ea.drift.iter().zip(&eb.drift).map(|(x, z)| x - z).collect::<Vec<_>>()));
        assert_eq!(ea.log_h, e0.log_h);
    }
    assert!(sup <= m * (1.0 + 1e-12), "{sup}");
    assert!(apart > 0.0);
}

#[test]
fn zero_drift_is_brownian() {
    let dim = 4;
    let mut cfg = ModelConfig::new(KernelParams::new(dim, 1.0).unwrap(), 12);
    cfg.max_steps = 50;
    cfg.record_stride = 0;
    let starts = vec![vec![0.0; dim]; 4000];
    let ts = reverse_sample_batch(&ZeroDrift { dim }, &starts, &cfg, Exec::default()).unwrap();
    let var_want = cfg.dt_max * 50.0;
    let mut s2 = 0.0;
    for t in &ts {
        assert_eq!(t.stop_reason, StopReason::StepCap);
        assert_eq!(t.endpoint_snapped, None);
        s2 += t.endpoint.iter().map(|x| x * x).sum::<f64>();
    }
    let var = s2 / (4000.0 * dim as f64);
    // 16000 χ² draws: relative SE ≈ 1.1%.
    assert!((var / var_want - 1.0).abs() < 0.05, "{var} vs {var_want}");
}

#[test]
fn single_atom_always_arrives() {
    let dim = 10;
    let mut cfg = ModelConfig::new(KernelParams::new(dim, 1.0).unwrap(), 13);
    cfg.stop_threshold = 1e3;
    cfg.record_stride = 0;
    let f = ExactDrift::new(single_atom(dim), cfg.kernel).unwrap();
    let starts = vec![point_at(dim, &[1.0]); 1000];
    let ts = reverse_sample_batch(&f, &starts, &cfg, Exec::default()).unwrap();
    let hits = ts.iter().filter(|t| t.endpoint_snapped == Some(0)).count();
    assert!(hits >= 990, "{hits}");
}

fn snapped_fraction(dt_max: Option<f64>) -> (f64, f64) {
    let dim = 20;
    let prior = two_point(dim, 2.0);
    let mut cfg = ModelConfig::new(KernelParams::new(dim, 1.0).unwrap(), 14);
    cfg.record_stride = 0;
    if let Some(dt) = dt_max {
        cfg.dt_max = dt;
    }
    let y = point_at(dim, &[0.05, 1.0]);
    let w = posterior_weights(&prior, &cfg.kernel, &y).unwrap().weights();
    let f = ExactDrift::new(prior, cfg.kernel).unwrap();
    let ts = reverse_sample_batch(&f, &vec![y; 10_000], &cfg, Exec::default()).unwrap();
    let a = ts.iter().filter(|t| t.endpoint_snapped == Some(0)).count() as f64 / 1e4;
    (a, w[0])
}

#[test]
fn snapping_frequency_matches_posterior_and_is_stable_in_dt() {
    let (a, want) = snapped_fraction(None);
    assert!((a - want).abs() <= 0.02, "{a} vs {want}");
    let default_dt = ModelConfig::new(KernelParams::new(20, 1.0).unwrap(), 0).dt_max;
    let (half, _) = snapped_fraction(Some(default_dt / 2.0));
    // Two-bin histograms: TV is the difference in one bin.
    assert!((a - half).abs() <= 0.02, "{a} vs {half}");
}

#[test]
fn raising_the_threshold_extends_the_path() {
    let dim = 10;
    let prior = two_point(dim, 2.0);
    let mut cfg = ModelConfig::new(KernelParams::new(dim, 1.0).unwrap(), 15);
    let f = ExactDrift::new(prior, cfg.kernel).unwrap();
    let y = point_at(dim, &[0.3, 0.8]);
    cfg.stop_threshold = 10.0;
    let short = reverse_sample(&f, &y, &cfg).unwrap();
    cfg.stop_threshold = 13.0;
    let long = reverse_sample(&f, &y, &cfg).unwrap();
    assert_eq!(short.stop_reason, StopReason::ThresholdHit);
    assert!(long.duration() >= short.duration());
    let n = short.states.len() - 1;
    assert_eq!(short.states[..n], long.states[..n]);

    // ∫|b|² blows up at the end: the last quarter of the recorded path
    // gathers more than the first.
    let s = &short.states;
    let q = s.len() / 4;
    let first = s[q].accumulated_l2sq - s[0].accumulated_l2sq;
    let last = s[s.len() - 1].accumulated_l2sq - s[s.len() - 1 - q].accumulated_l2sq;
    assert!(last > first, "{last} vs {first}");
}

#[test]
fn trajectory_exports() {
    let dim = 3;
    let mut cfg = ModelConfig::new(KernelParams::new(dim, 1.0).unwrap(), 16);
    cfg.max_steps = 30;
    let t = reverse_sample(&ZeroDrift { dim }, &[0.0; 3], &cfg).unwrap();
    let csv = t.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), t.states.len() + 1);
    assert_eq!(lines[1].split(',').count(), dim + 2);
    let table = read_records(&t.to_records().to_bytes()).unwrap();
    assert_eq!(table.width, dim + 2);
    assert_eq!(table.row(table.rows() - 1)[1..=dim], t.endpoint[..]);
    assert!(t.states.windows(2).all(|w| w[1].time > w[0].time));
}

#[test]
fn exponential_time_identity_for_brownian_norm() {
    // X_t = |W_t|², d = 3, λ = 2: both sides equal 3/2.
    let steps = 200;
    let rep = exp_time_identity_check(2.0, 40_000, 17, Exec::default(), |r, tau| {
        let dt = tau / steps as f64;
        let mut w = [0.0f64; 3];
        let mut integral = 0.0;
        for _ in 0..steps {
            let before: f64 = w.iter().map(|x| x * x).sum();
            for wi in &mut w {
                *wi += dt.sqrt() * r.sample::<f64, _>(StandardNormal);
            }
            let after: f64 = w.iter().map(|x| x * x).sum();
            integral += 0.5 * (before + after) * dt;
        }
        PathSample {
            value: w.iter().map(|x| x * x).sum(),
            integral,
        }
    })
    .unwrap();
    assert!(rep.agree, "{rep:?}");
    assert!((rep.lhs_mean - 1.5).abs() < 4.0 * rep.lhs_se);
}
