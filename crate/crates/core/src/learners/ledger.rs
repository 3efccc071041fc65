use crate::geometry::vector::{axpy, dist2, dot, norm2_sq};

/// Per-round regularizer added to the linear part of the loss.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    None,
    /// `weight * ||w - anchor||^2`
    Quadratic { weight: f64, anchor: Vec<f64> },
    /// `xi * ||w - center|| + nu * ||w - center||^2`
    Radial { xi: f64, nu: f64 },
}

impl Regularizer {
    fn value(&self, w: &[f64], center: &[f64]) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::Quadratic { weight, anchor } => {
                let r = dist2(w, anchor);
                weight * r * r
            }
            Regularizer::Radial { xi, nu } => {
                let r = dist2(w, center);
                xi * r + nu * r * r
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Round {
    w: Vec<f64>,
    sent: Vec<f64>,
    base: Vec<f64>,
    reg: Regularizer,
}

/// Regret bookkeeping for the losses a driver hands to a learner.
///
/// Each round stores the play `w_t`, the vector `sent_t` actually given to
/// the learner, and the loss `l_t(w) = <base_t, w> + reg_t(w)` it
/// linearizes. Linear parts are also kept as running sums so regret against
/// any competitor costs `O(d)`.
#[derive(Debug, Clone)]
pub struct RegretLedger {
    center: Vec<f64>,
    rounds: Vec<Round>,
    sent_dot_w: f64,
    sent_sum: Vec<f64>,
    base_dot_w: f64,
    base_sum: Vec<f64>,
    reg_at_w: f64,
}

impl RegretLedger {
    /// `center` is the origin for [`Regularizer::Radial`] terms.
    pub fn new(center: Vec<f64>) -> Self {
        let d = center.len();
        RegretLedger {
            center,
            rounds: Vec::new(),
            sent_dot_w: 0.0,
            sent_sum: vec![0.0; d],
            base_dot_w: 0.0,
            base_sum: vec![0.0; d],
            reg_at_w: 0.0,
        }
    }

    /// Linear round: the learner saw exactly the loss gradient.
    pub fn record_linear(&mut self, w: &[f64], g: &[f64]) {
        self.record(w, g, g, Regularizer::None);
    }

    pub fn record(&mut self, w: &[f64], sent: &[f64], base: &[f64], reg: Regularizer) {
        self.sent_dot_w += dot(sent, w);
        axpy(1.0, sent, &mut self.sent_sum);
        self.base_dot_w += dot(base, w);
        axpy(1.0, base, &mut self.base_sum);
        self.reg_at_w += reg.value(w, &self.center);
        self.rounds.push(Round {
            w: w.to_vec(),
            sent: sent.to_vec(),
            base: base.to_vec(),
            reg,
        });
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    /// `sum_t <sent_t, w_t - u>` from the running sums.
    pub fn sent_regret(&self, u: &[f64]) -> f64 {
        self.sent_dot_w - dot(&self.sent_sum, u)
    }

    /// Same quantity, recomputed round by round from the stored trace.
    pub fn sent_regret_from_trace(&self, u: &[f64]) -> f64 {
        self.rounds
            .iter()
            .map(|r| r.sent.iter().zip(&r.w).zip(u).map(|((g, w), u)| g * (w - u)).sum::<f64>())
            .sum()
    }

    /// `sum_t l_t(w_t) - l_t(u)` for the regularized losses.
    pub fn loss_regret(&self, u: &[f64]) -> f64 {
        let reg_at_u: f64 = self.rounds.iter().map(|r| r.reg.value(u, &self.center)).sum();
        self.base_dot_w - dot(&self.base_sum, u) + self.reg_at_w - reg_at_u
    }

    pub fn loss_regret_from_trace(&self, u: &[f64]) -> f64 {
        self.rounds
            .iter()
            .map(|r| {
                r.base.iter().zip(&r.w).zip(u).map(|((g, w), u)| g * (w - u)).sum::<f64>()
                    + r.reg.value(&r.w, &self.center)
                    - r.reg.value(u, &self.center)
            })
            .sum()
    }

    /// `sum_t ||sent_t||^2`
    pub fn sent_sq_sum(&self) -> f64 {
        self.rounds.iter().map(|r| norm2_sq(&r.sent)).sum()
    }

    pub fn plays(&self) -> impl Iterator<Item = &[f64]> {
        self.rounds.iter().map(|r| r.w.as_slice())
    }

    pub fn sent(&self) -> impl Iterator<Item = &[f64]> {
        self.rounds.iter().map(|r| r.sent.as_slice())
    }
}
