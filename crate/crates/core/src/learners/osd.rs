use super::{Feedback, OnlineLearner, StepSchedule};
use crate::error::Result;
use crate::geometry::vector::{axpy, norm2};
use crate::problems::Ball;

/// Projected online subgradient descent.
#[derive(Debug, Clone)]
pub struct Osd {
    domain: Ball,
    step: StepSchedule,
    w: Vec<f64>,
    t: usize,
    g_max: f64,
}

impl Osd {
    /// Starts at the domain center.
    pub fn new(domain: Ball, step: StepSchedule) -> Self {
        let w = domain.center.clone();
        Osd {
            domain,
            step,
            w,
            t: 0,
            g_max: 0.0,
        }
    }

    pub fn with_start(mut self, w1: Vec<f64>) -> Self {
        self.w = self.domain.project(&w1);
        self
    }

    /// Running max of observed gradient norms.
    pub fn gradient_scale(&self) -> f64 {
        self.g_max
    }
}

impl OnlineLearner for Osd {
    fn name(&self) -> &'static str {
        "osd"
    }

    fn domain(&self) -> &Ball {
        &self.domain
    }

    fn predict(&self) -> Vec<f64> {
        self.w.clone()
    }

    fn receive(&mut self, fb: Feedback<'_>) -> Result<()> {
        self.t += 1;
        self.g_max = self.g_max.max(norm2(fb.gradient));
        let eta = self.step.eta(self.t, self.domain.diameter(), self.g_max);
        if eta > 0.0 {
            axpy(-eta, fb.gradient, &mut self.w);
            self.domain.project_in_place(&mut self.w);
        }
        Ok(())
    }
}
