use super::{Feedback, OnlineLearner};
use crate::error::Result;
use crate::geometry::vector::{axpy, dist2, norm2};
use crate::geometry::NormSpec;
use crate::problems::Ball;

/// Optimistic online gradient descent (Euclidean optimistic mirror descent).
///
/// Plays `w_t = Proj(y_t - eta_t h_t)` for the hint `h_t`, then updates
/// `y_{t+1} = Proj(y_t - eta_t g_t)`. The step is
/// `eta_t = D / sqrt(lambda * max(sum_{i<t} ||g_i - h_i||^2, floor^2))`,
/// where `floor` is the first nonzero gradient or hint norm seen.
#[derive(Debug, Clone)]
pub struct OptimisticOmd {
    domain: Ball,
    lambda: f64,
    y: Vec<f64>,
    hint: Vec<f64>,
    miss_sq: f64,
    floor: f64,
}

impl OptimisticOmd {
    pub fn new(domain: Ball, norm: NormSpec) -> Self {
        let y = domain.center.clone();
        OptimisticOmd {
            hint: vec![0.0; y.len()],
            y,
            domain,
            lambda: norm.lambda,
            miss_sq: 0.0,
            floor: 0.0,
        }
    }

    fn eta(&self) -> f64 {
        let denom = self.miss_sq.max(self.floor * self.floor);
        if denom > 0.0 {
            self.domain.diameter() / (self.lambda * denom).sqrt()
        } else {
            0.0
        }
    }

    /// `sum ||g_i - h_i||^2` over completed rounds.
    pub fn hint_error(&self) -> f64 {
        self.miss_sq
    }
}

impl OnlineLearner for OptimisticOmd {
    fn name(&self) -> &'static str {
        "optimistic_omd"
    }

    fn domain(&self) -> &Ball {
        &self.domain
    }

    fn predict(&self) -> Vec<f64> {
        let mut w = self.y.clone();
        let eta = if self.floor > 0.0 {
            self.eta()
        } else {
            // first hint fixes the floor for the very first play
            let n = norm2(&self.hint);
            if n > 0.0 {
                self.domain.diameter() / (self.lambda.sqrt() * n)
            } else {
                0.0
            }
        };
        axpy(-eta, &self.hint, &mut w);
        self.domain.project_in_place(&mut w);
        w
    }

    fn receive(&mut self, fb: Feedback<'_>) -> Result<()> {
        if self.floor == 0.0 {
            self.floor = [norm2(&self.hint), norm2(fb.gradient)]
                .into_iter()
                .find(|&n| n > 0.0)
                .unwrap_or(0.0);
        }
        let eta = self.eta();
        axpy(-eta, fb.gradient, &mut self.y);
        self.domain.project_in_place(&mut self.y);
        let miss = dist2(fb.gradient, &self.hint);
        self.miss_sq += miss * miss;
        match fb.hint_next {
            Some(h) => self.hint.copy_from_slice(h),
            None => {
                log::warn!("optimistic learner received no hint; using zero");
                self.hint.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        Ok(())
    }
}
