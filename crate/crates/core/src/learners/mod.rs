//! Online convex optimization learners driven by linearized losses.

mod ftrl;
mod ledger;
mod optimistic;
mod osd;
mod parameter_free;
mod sc_osd;

use serde::{Deserialize, Serialize};

pub use ftrl::Ftrl;
pub use ledger::{RegretLedger, Regularizer};
pub use optimistic::OptimisticOmd;
pub use osd::Osd;
pub use parameter_free::ParameterFree;
pub use sc_osd::ScOsd;

use crate::error::Result;
use crate::geometry::NormSpec;
use crate::problems::Ball;

/// What the learner observes at the end of a round.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    /// Gradient of this round's loss at the played point.
    pub gradient: &'a [f64],
    /// Hint for the next round; only optimistic learners read it.
    pub hint_next: Option<&'a [f64]>,
    /// Strong convexity `mu_t` of this round's loss; 0 for linear losses.
    pub strong_convexity: f64,
}

impl<'a> Feedback<'a> {
    pub fn linear(gradient: &'a [f64]) -> Self {
        Feedback {
            gradient,
            hint_next: None,
            strong_convexity: 0.0,
        }
    }
}

/// A learner plays `w_t in W`, then observes feedback about `l_t`.
/// `predict` depends only on feedback from earlier rounds.
pub trait OnlineLearner: Send {
    fn name(&self) -> &'static str;

    fn domain(&self) -> &Ball;

    fn predict(&self) -> Vec<f64>;

    fn receive(&mut self, feedback: Feedback<'_>) -> Result<()>;
}

/// Step size rule for [`Osd`] and [`Ftrl`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum StepSchedule {
    /// `eta_t = D / (G_t sqrt(t))` with `G_t` the running max gradient norm.
    Adaptive,
    Constant(f64),
    /// `eta_t = c / sqrt(t)`
    InverseSqrt(f64),
}

impl StepSchedule {
    pub(crate) fn eta(&self, t: usize, diameter: f64, g_max: f64) -> f64 {
        match *self {
            StepSchedule::Adaptive if g_max > 0.0 => diameter / (g_max * (t as f64).sqrt()),
            StepSchedule::Adaptive => 0.0,
            StepSchedule::Constant(eta) => eta,
            StepSchedule::InverseSqrt(c) => c / (t as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Osd,
    Ftrl,
    OptimisticOmd,
    ScOsd,
    ParameterFree,
}

impl LearnerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::Osd => "osd",
            LearnerKind::Ftrl => "ftrl",
            LearnerKind::OptimisticOmd => "optimistic_omd",
            LearnerKind::ScOsd => "sc_osd",
            LearnerKind::ParameterFree => "parameter_free",
        }
    }

    /// Builds a learner over `domain` with default step rules.
    /// `lipschitz_cap` is read only by the parameter-free learner.
    pub fn build(&self, domain: &Ball, lipschitz_cap: f64) -> Result<Box<dyn OnlineLearner>> {
        let domain = domain.clone();
        Ok(match self {
            LearnerKind::Osd => Box::new(Osd::new(domain, StepSchedule::Adaptive)),
            LearnerKind::Ftrl => Box::new(Ftrl::new(domain, StepSchedule::Adaptive)),
            LearnerKind::OptimisticOmd => Box::new(OptimisticOmd::new(domain, NormSpec::l2())),
            LearnerKind::ScOsd => Box::new(ScOsd::new(domain)),
            LearnerKind::ParameterFree => Box::new(ParameterFree::new(domain, lipschitz_cap)?),
        })
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "osd" => LearnerKind::Osd,
            "ftrl" => LearnerKind::Ftrl,
            "optimistic_omd" | "optimistic" => LearnerKind::OptimisticOmd,
            "sc_osd" => LearnerKind::ScOsd,
            "parameter_free" => LearnerKind::ParameterFree,
            other => return Err(crate::error::Error::invalid("learner", format!("unknown learner `{other}`"))),
        })
    }
}
