//! Dyadic tree aggregation of per-node noise.
//!
//! Round `t` owns node `t`, covering the interval `S_t` that ends at `t` and
//! has length `lowbit(t)`. The released noise `gamma_t` sums the nodes in
//! `I_t`, whose intervals tile `[1, t]`.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::accounting::delta_sensitivity;
use crate::error::{Error, Result};
use crate::geometry::{NoiseDistribution, Rng};

/// Node indices whose intervals partition `[1, t]`, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexSet {
    pub t: usize,
    pub members: Vec<usize>,
}

impl IndexSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }
}

/// Nonzero prefix sums of the binary expansion of `t`, most significant bit
/// first: `I_7 = {4, 6, 7}`, `I_8 = {8}`.
pub fn index_set(t: usize) -> Result<IndexSet> {
    if t == 0 {
        return Err(Error::invalid("t", "index sets start at round 1"));
    }
    let mut members = Vec::with_capacity(t.count_ones() as usize);
    let mut acc = 0;
    for bit in (0..usize::BITS).rev() {
        let b = 1usize << bit;
        if t & b != 0 {
            acc += b;
            members.push(acc);
        }
    }
    Ok(IndexSet { t, members })
}

/// Interval `S_i = {i - lowbit(i) + 1, ..., i}` covered by node `i >= 1`.
pub fn node_interval(i: usize) -> RangeInclusive<usize> {
    assert!(i >= 1, "node indices start at 1");
    let low = i & i.wrapping_neg();
    (i - low + 1)..=i
}

/// Nodes `t` with `q in S_t` and `t <= horizon`: the ancestors of leaf `q`.
pub fn in_set(q: usize, horizon: usize) -> Vec<usize> {
    assert!(q >= 1, "rounds start at 1");
    let mut out = Vec::new();
    let mut t = q;
    while t <= horizon {
        out.push(t);
        t += t & t.wrapping_neg();
    }
    out
}

/// Privacy level `rho`; `f64::INFINITY` selects the non-private mode.
pub fn validate_rho(rho: f64) -> Result<()> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::invalid("rho", format!("must be positive or +inf, got {rho}")));
    }
    Ok(())
}

/// Noise variance `sigma_t^2 = Delta_t^2 log2(2T) / rho^2`, with `Delta_t`
/// the node sensitivity. Zero when `rho` is infinite.
pub fn sigma_sq_schedule(
    t: usize,
    k: u32,
    rho: f64,
    g: f64,
    h: f64,
    max_disp: f64,
    horizon: usize,
) -> Result<f64> {
    validate_rho(rho)?;
    if t == 0 || k == 0 {
        return Err(Error::invalid("t/k", "round and weight exponent must be at least 1"));
    }
    if t > horizon {
        return Err(Error::HorizonExceeded { round: t, horizon });
    }
    if rho.is_infinite() {
        return Ok(0.0);
    }
    let delta = delta_sensitivity(t, k, g, h, max_disp);
    Ok(delta * delta * log2_2t(horizon) / (rho * rho))
}

/// Noise scale `sigma_t` (square root of [`sigma_sq_schedule`]).
pub fn sigma_schedule(
    t: usize,
    k: u32,
    rho: f64,
    g: f64,
    h: f64,
    max_disp: f64,
    horizon: usize,
) -> Result<f64> {
    sigma_sq_schedule(t, k, rho, g, h, max_disp, horizon).map(f64::sqrt)
}

pub(crate) fn log2_2t(t: usize) -> f64 {
    (2.0 * t as f64).log2()
}

/// Noise drawn for one node; never modified after creation.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub sigma: f64,
    pub noise: Vec<f64>,
}

/// Sequential generator of `gamma_1, ..., gamma_T`.
#[derive(Debug, Clone)]
pub struct NoiseTree {
    dist: NoiseDistribution,
    rng: Rng,
    horizon: usize,
    nodes: Vec<NodeRecord>,
}

impl NoiseTree {
    pub fn new(dist: NoiseDistribution, rng: Rng, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        Ok(NoiseTree {
            dist,
            rng,
            horizon,
            nodes: Vec::with_capacity(horizon),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn distribution(&self) -> &NoiseDistribution {
        &self.dist
    }

    /// Last round served, 0 before the first call.
    pub fn round(&self) -> usize {
        self.nodes.len()
    }

    /// Stored record of node `i`, if already generated.
    pub fn node(&self, i: usize) -> Option<&NodeRecord> {
        i.checked_sub(1).and_then(|j| self.nodes.get(j))
    }

    /// Generates node `t` at scale `sigma` and returns `gamma_t`.
    /// Rounds must arrive as `1, 2, ..., horizon`.
    pub fn noise(&mut self, t: usize, sigma: f64) -> Result<Vec<f64>> {
        let expected = self.nodes.len() + 1;
        if t != expected {
            return Err(Error::OutOfOrder { expected, got: t });
        }
        if t > self.horizon {
            return Err(Error::HorizonExceeded {
                round: t,
                horizon: self.horizon,
            });
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", format!("must be finite and non-negative, got {sigma}")));
        }
        // the base draw is taken even at sigma = 0 so the stream position
        // does not depend on the privacy level
        let mut noise = self.dist.sample(&mut self.rng);
        noise.iter_mut().for_each(|v| *v *= sigma);
        self.nodes.push(NodeRecord { sigma, noise });

        let mut gamma = vec![0.0; self.dist.dim()];
        for i in index_set(t)?.iter() {
            for (g, r) in gamma.iter_mut().zip(&self.nodes[i - 1].noise) {
                *g += r;
            }
        }
        Ok(gamma)
    }
}
