use super::{Feedback, OnlineLearner, StepSchedule};
use crate::error::Result;
use crate::geometry::vector::{axpy, norm2};
use crate::problems::Ball;

/// Follow-the-regularized-leader with `psi_t(w) = ||w - w_1||^2 / (2 eta_t)`.
///
/// The minimizer of `<S_t, w> + psi_t(w)` over a ball is the projection of
/// the unconstrained one, so `w_{t+1} = Proj(w_1 - eta_t S_t)`.
#[derive(Debug, Clone)]
pub struct Ftrl {
    domain: Ball,
    step: StepSchedule,
    w1: Vec<f64>,
    sum: Vec<f64>,
    w: Vec<f64>,
    t: usize,
    g_max: f64,
}

impl Ftrl {
    pub fn new(domain: Ball, step: StepSchedule) -> Self {
        let w1 = domain.center.clone();
        Ftrl {
            sum: vec![0.0; w1.len()],
            w: w1.clone(),
            w1,
            domain,
            step,
            t: 0,
            g_max: 0.0,
        }
    }
}

impl OnlineLearner for Ftrl {
    fn name(&self) -> &'static str {
        "ftrl"
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
        axpy(1.0, fb.gradient, &mut self.sum);
        let eta = self.step.eta(self.t, self.domain.diameter(), self.g_max);
        self.w.copy_from_slice(&self.w1);
        axpy(-eta, &self.sum, &mut self.w);
        self.domain.project_in_place(&mut self.w);
        Ok(())
    }
}
