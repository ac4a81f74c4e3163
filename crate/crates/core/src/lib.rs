//! Denoising by time reversal of exponentially killed Brownian motion.
//!
//! An observation `y = x + σ√U·V` (Laplace-type noise, `U ~ Exp(1)`,
//! `V ~ N(0, I)`) is carried back onto the support of an empirical prior by
//! the diffusion `dY = ∇log h(Y) ds + dW`, where `h = Σᵢ G(xᵢ, ·)` and `G`
//! is the Bessel-K resolvent kernel. See the README for the module map.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod par;
pub mod posterior;
pub mod prior;
pub mod rng;
pub mod scorematch;
pub mod specfun;

pub use error::{Error, Result};
