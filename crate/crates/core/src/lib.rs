//! Differentially private online-to-batch conversion.
//!
//! A stochastic convex problem is solved by feeding an online learner the
//! running sum of weighted gradient differences, privatized with tree
//! aggregated noise, and averaging its plays with polynomial weights.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accounting;
pub mod conversion;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod learners;
pub mod problems;
pub mod tree_noise;

pub use error::{Error, Result};
pub use geometry::{NoiseDistribution, NoiseKind, NormSpec, Rng};
pub use learners::{LearnerKind, OnlineLearner};
pub use problems::{Ball, Dataset, Datum, ProblemInstance};
