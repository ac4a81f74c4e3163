use crate::error::{Error, Result};

/// A `2^k × 2^k` grid of real pixel values, row-major. Values are
/// unconstrained reals; ingested bytes are scaled into `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    resolution_log2: u32,
    pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(resolution_log2: u32, pixels: Vec<f64>) -> Result<Self> {
        let side = 1usize << resolution_log2;
        if pixels.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                found: pixels.len(),
            });
        }
        Ok(Self {
            resolution_log2,
            pixels,
        })
    }

    /// Samples `f(u, v)` at cell centres of the unit square, `u` along rows.
    pub fn from_fn(resolution_log2: u32, f: impl Fn(f64, f64) -> f64) -> Self {
        let side = 1usize << resolution_log2;
        let h = 1.0 / side as f64;
        let mut pixels = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                pixels.push(f((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            }
        }
        Self {
            resolution_log2,
            pixels,
        }
    }

    pub fn resolution_log2(&self) -> u32 {
        self.resolution_log2
    }

    pub fn side(&self) -> usize {
        1 << self.resolution_log2
    }

    /// Flattened dimension `d = 2^{2k}`.
    pub fn dim(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side() + col]
    }

    /// Discrete `L²((0,1]²)` norm of the piecewise-constant image:
    /// root mean square of the pixels.
    pub fn l2_norm(&self) -> f64 {
        (self.pixels.iter().map(|p| p * p).sum::<f64>() / self.pixels.len() as f64).sqrt()
    }
}

/// Block-mean discretisation: pixel `(i, j)` at resolution `2^k` is the exact
/// mean of the corresponding `2^{K−k} × 2^{K−k}` block of the fine grid.
pub fn discretize(fine: &ImageGrid, target_k: u32) -> Result<ImageGrid> {
    if target_k > fine.resolution_log2 {
        return Err(Error::DimensionMismatch {
            expected: fine.resolution_log2 as usize,
            found: target_k as usize,
        });
    }
    let side = 1usize << target_k;
    let block = 1usize << (fine.resolution_log2 - target_k);
    let fine_side = fine.side();
    let norm = (block * block) as f64;
    let mut pixels = vec![0.0; side * side];
    for (i, row) in pixels.chunks_exact_mut(side).enumerate() {
        for (j, px) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for r in i * block..(i + 1) * block {
                let base = r * fine_side + j * block;
                s += fine.pixels[base..base + block].iter().sum::<f64>();
            }
            *px = s / norm;
        }
    }
    ImageGrid::new(target_k, pixels)
}
