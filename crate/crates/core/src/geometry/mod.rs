//! Norms, noise distributions, divergences and the deterministic RNG.

mod divergence;
mod noise;
mod norm;
mod rng;
pub mod vector;

pub use divergence::{exponential_log_density, gaussian_renyi_divergence, pure_dp_density_ratio_bound};
pub use noise::{sample_noise, NoiseDistribution, NoiseKind};
pub use norm::{NormKind, NormSpec};
pub use rng::{derive_seed, Rng};
