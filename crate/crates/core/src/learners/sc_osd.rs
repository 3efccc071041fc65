use super::{Feedback, OnlineLearner};
use crate::error::{Error, Result};
use crate::geometry::vector::axpy;
use crate::problems::Ball;

/// Online gradient descent for strongly convex losses:
/// `w_{t+1} = Proj(w_t - g_t / sum_{i<=t} mu_i)`.
#[derive(Debug, Clone)]
pub struct ScOsd {
    domain: Ball,
    w: Vec<f64>,
    mu_sum: f64,
}

impl ScOsd {
    pub fn new(domain: Ball) -> Self {
        let w = domain.center.clone();
        ScOsd { domain, w, mu_sum: 0.0 }
    }

    pub fn curvature_sum(&self) -> f64 {
        self.mu_sum
    }
}

impl OnlineLearner for ScOsd {
    fn name(&self) -> &'static str {
        "sc_osd"
    }

    fn domain(&self) -> &Ball {
        &self.domain
    }

    fn predict(&self) -> Vec<f64> {
        self.w.clone()
    }

    fn receive(&mut self, fb: Feedback<'_>) -> Result<()> {
        if !(fb.strong_convexity > 0.0) {
            return Err(Error::invalid(
                "strong_convexity",
                format!("strongly convex learner needs mu_t > 0, got {}", fb.strong_convexity),
            ));
        }
        self.mu_sum += fb.strong_convexity;
        axpy(-1.0 / self.mu_sum, fb.gradient, &mut self.w);
        self.domain.project_in_place(&mut self.w);
        Ok(())
    }
}
