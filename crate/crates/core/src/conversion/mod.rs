//! Private online-to-batch conversion and its variants.

mod driver;
mod schedule;
mod variant;

pub use driver::{learner_cap, pf_constants_for, run, Diagnostics, DispMode, RunConfig, RunOutput, TraceRow, NOISE_STREAM};
pub use schedule::{delta_bound, gradient_difference, step_average, WeightSchedule};
pub use variant::{
    clip_to, hint_provider, loss_gradient_pf, loss_gradient_plain, loss_gradient_sc, pf_constants, PfConstants,
    VariantConfig, VariantMode,
};
