//! Synthetic stochastic convex problems with exact constants.

mod ball;
mod dataset;
mod instance;

pub use ball::Ball;
pub use dataset::{Dataset, Datum};
pub use instance::{
    population_gap, project, Constants, FamilyParams, InstanceDescriptor, ProblemInstance,
};
