use super::{Feedback, OnlineLearner};
use crate::error::{Error, Result};
use crate::geometry::vector::{axpy, dist2, dot, norm2, norm2_sq};
use crate::problems::Ball;

/// Coin-betting learner: a Krichevsky-Trofimov bettor picks the magnitude
/// `z_t`, an adaptive projected gradient learner on the unit ball picks the
/// direction `y_t`, and the unconstrained play `center + z_t y_t` is
/// projected onto the domain.
///
/// Gradients are reduced to the unconstrained problem with
/// `g~ = (g + ||g|| grad dist_W(w~)) / 2`, which keeps `||g~|| <= ||g||` and
/// costs a factor 2 in regret.
#[derive(Debug, Clone)]
pub struct ParameterFree {
    domain: Ball,
    cap: f64,
    wealth: f64,
    coin_sum: f64,
    t: usize,
    dir: Vec<f64>,
    dir_sq: f64,
    clips: usize,
}

impl ParameterFree {
    /// `lipschitz_cap` must bound every incoming gradient norm; larger
    /// gradients are rescaled to the cap and counted.
    pub fn new(domain: Ball, lipschitz_cap: f64) -> Result<Self> {
        Self::with_initial_wealth(domain, lipschitz_cap, 1.0)
    }

    pub fn with_initial_wealth(domain: Ball, lipschitz_cap: f64, wealth: f64) -> Result<Self> {
        if !(lipschitz_cap > 0.0) || !lipschitz_cap.is_finite() {
            return Err(Error::invalid("lipschitz_cap", format!("must be positive, got {lipschitz_cap}")));
        }
        if !(wealth > 0.0) {
            return Err(Error::invalid("wealth", "initial wealth must be positive"));
        }
        let d = domain.dim();
        Ok(ParameterFree {
            domain,
            cap: lipschitz_cap,
            wealth,
            coin_sum: 0.0,
            t: 0,
            dir: vec![0.0; d],
            dir_sq: 0.0,
            clips: 0,
        })
    }

    fn bet(&self) -> f64 {
        self.coin_sum / (self.t as f64 + 1.0) * self.wealth
    }

    fn unconstrained(&self) -> Vec<f64> {
        let mut w = self.domain.center.clone();
        axpy(self.bet(), &self.dir, &mut w);
        w
    }

    /// Gradients that exceeded the cap.
    pub fn clip_count(&self) -> usize {
        self.clips
    }

    pub fn wealth(&self) -> f64 {
        self.wealth
    }
}

impl OnlineLearner for ParameterFree {
    fn name(&self) -> &'static str {
        "parameter_free"
    }

    fn domain(&self) -> &Ball {
        &self.domain
    }

    fn predict(&self) -> Vec<f64> {
        self.domain.project(&self.unconstrained())
    }

    fn receive(&mut self, fb: Feedback<'_>) -> Result<()> {
        let mut g = fb.gradient.to_vec();
        let gn = norm2(&g);
        if gn > self.cap {
            self.clips += 1;
            log::debug!("parameter-free learner clipped gradient {gn} to {}", self.cap);
            g.iter_mut().for_each(|v| *v *= self.cap / gn);
        }
        let gn = gn.min(self.cap);

        let raw = self.unconstrained();
        let proj = self.domain.project(&raw);
        let outside = dist2(&raw, &proj);
        let mut gt: Vec<f64> = g.iter().map(|v| 0.5 * v).collect();
        if outside > 0.0 {
            for ((o, r), p) in gt.iter_mut().zip(&raw).zip(&proj) {
                *o += 0.5 * gn * (r - p) / outside;
            }
        }

        // magnitude: KT bettor on coins in [-1, 1]
        let coin = (-dot(&gt, &self.dir) / self.cap).clamp(-1.0, 1.0);
        let bet = self.bet();
        self.wealth += coin * bet;
        self.coin_sum += coin;
        self.t += 1;

        // direction: adaptive projected gradient on the unit ball
        self.dir_sq += norm2_sq(&gt);
        if self.dir_sq > 0.0 {
            let eta = std::f64::consts::SQRT_2 / self.dir_sq.sqrt();
            axpy(-eta, &gt, &mut self.dir);
            let n = norm2(&self.dir);
            if n > 1.0 {
                self.dir.iter_mut().for_each(|v| *v /= n);
            }
        }
        Ok(())
    }
}
