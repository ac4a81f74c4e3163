#![allow(dead_code)]

use serde_json::Value;

/// Reference values frozen by `tests/oracle/gen_oracles.py` (mpmath, 30 digits).
pub fn oracles() -> Value {
    let raw = include_str!("../data/oracles.json");
    serde_json::from_str(raw).expect("oracles.json parses")
}

pub fn as_vec(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

use polar_denoise::prior::ImageGrid;
use rand::Rng as _;

/// Random fine grid with dyadic pixel values, so block means are exact in binary.
pub fn dyadic_grid(k: u32, rng: &mut polar_denoise::rng::Rng) -> ImageGrid {
    let side = 1usize << k;
    let pixels = (0..side * side).map(|_| rng.random_range(0..256) as f64 / 256.0).collect();
    ImageGrid::new(k, pixels).unwrap()
}

pub fn random_grid(k: u32, rng: &mut polar_denoise::rng::Rng) -> ImageGrid {
    let side = 1usize << k;
    let pixels = (0..side * side).map(|_| rng.random_range(-1.0..1.0)).collect();
    ImageGrid::new(k, pixels).unwrap()
}
