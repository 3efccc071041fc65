use serde::{Deserialize, Serialize};

use crate::geometry::vector::axpy;
use crate::problems::{Datum, ProblemInstance};

/// Polynomial weights `beta_t = t^k`, with `beta_0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSchedule {
    pub k: u32,
}

impl WeightSchedule {
    pub fn new(k: u32) -> Self {
        assert!(k >= 1, "weight exponent must be at least 1");
        WeightSchedule { k }
    }

    pub fn beta(&self, t: usize) -> f64 {
        (t as f64).powi(self.k as i32)
    }

    /// `beta_{1:t}`, summed in increasing order (exact while below 2^53).
    pub fn prefix(&self, t: usize) -> f64 {
        (1..=t).map(|i| self.beta(i)).sum()
    }
}

/// `x_t = (B x_prev + beta_t w_t) / (B + beta_t)` with `B = beta_{1:t-1}`.
pub fn step_average(x_prev: &[f64], w_t: &[f64], prefix_prev: f64, beta_t: f64) -> Vec<f64> {
    debug_assert!(beta_t > 0.0);
    let total = prefix_prev + beta_t;
    x_prev
        .iter()
        .zip(w_t)
        .map(|(x, w)| (prefix_prev * x + beta_t * w) / total)
        .collect()
}

/// `delta_t = beta_t grad l(x_t, z) - beta_{t-1} grad l(x_prev, z)`, both
/// gradients on the same datum.
pub fn gradient_difference(
    instance: &ProblemInstance,
    x_t: &[f64],
    x_prev: &[f64],
    z: &Datum,
    beta_t: f64,
    beta_prev: f64,
) -> Vec<f64> {
    let mut delta = instance.grad(x_t, z);
    delta.iter_mut().for_each(|v| *v *= beta_t);
    if beta_prev != 0.0 {
        axpy(-beta_prev, &instance.grad(x_prev, z), &mut delta);
    }
    delta
}

/// Per-round sensitivity bound `(k+1) (G + H disp) t^{k-1}` on `||delta_t||`.
pub fn delta_bound(t: usize, k: u32, g: f64, h: f64, disp: f64) -> f64 {
    (k as f64 + 1.0) * (g + h * disp) * (t as f64).powi(k as i32 - 1)
}
