use serde::{Deserialize, Serialize};

use crate::conversion::{PfConstants, VariantMode};
use crate::error::{Error, Result};
use crate::problems::Constants;
use crate::tree_noise::log2_2t;

/// Everything the closed-form convergence bounds read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub k: u32,
    /// Strong convexity of `||.||^2 / 2`'s dual setup; 2 for the L2 norm.
    pub lambda: f64,
    pub constants: Constants,
    /// Second-moment constant `V` of the base noise.
    pub noise_variance: f64,
    pub rho: f64,
    /// `||x* - center||` (parameter-free bound).
    pub optimum_norm: f64,
    pub pf: Option<PfConstants>,
}

/// Right-hand side of the convergence guarantee matching `variant`, with
/// `regret` standing for the (expected) regret term.
pub fn theoretical_gap_bound(variant: VariantMode, inputs: &BoundInputs, horizon: usize, regret: f64) -> Result<f64> {
    let c = &inputs.constants;
    let k = inputs.k as f64;
    let t = horizon as f64;
    let l2t = log2_2t(horizon);
    let gdh = c.lipschitz + c.diameter * c.smoothness;
    let noise_ratio = |num: f64| if inputs.rho.is_infinite() { 0.0 } else { num / inputs.rho };
    match variant {
        VariantMode::Plain | VariantMode::Optimistic => {
            let lead = (k + 1.0) * regret / t.powf(k + 1.0);
            let stat = (c.sigma_g + c.diameter * c.sigma_h) / t.sqrt();
            let privacy = noise_ratio((2.0 * inputs.noise_variance).sqrt() * gdh * l2t / t);
            Ok(lead + 2.0 * (k + 1.0).powi(2) * c.diameter / inputs.lambda.sqrt() * (stat + privacy))
        }
        VariantMode::StronglyConvex => {
            if !(c.mu > 0.0) {
                return Err(Error::invalid("mu", "strongly convex bound needs mu > 0"));
            }
            let lead = (k + 1.0) * regret / t.powf(k + 1.0);
            let stat = (c.sigma_g + c.diameter * c.sigma_h).powi(2) / t;
            let privacy = if inputs.rho.is_infinite() {
                0.0
            } else {
                2.0 * inputs.noise_variance * gdh * gdh * l2t * l2t / (inputs.rho * inputs.rho * t * t)
            };
            Ok(lead + 16.0 * (k + 1.0).powi(3) / (inputs.lambda * c.mu) * (stat + privacy))
        }
        VariantMode::ParameterFree => {
            let pf = inputs
                .pf
                .ok_or_else(|| Error::invalid("pf", "parameter-free bound needs its constants"))?;
            let u = inputs.optimum_norm;
            let lead = 4.0 * regret / t.powi(4);
            let stat = 8.0 * pf.a * u * (c.lipschitz + 28.0 * u * c.smoothness) * pf.phi / t.sqrt();
            let privacy = noise_ratio(8.0 * pf.a_prime * u * gdh * pf.phi * l2t / t);
            Ok(lead + stat + privacy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(sigma_g: f64, rho: f64, v: f64) -> BoundInputs {
        BoundInputs {
            k: 1,
            lambda: 2.0,
            constants: Constants {
                diameter: 1.0,
                lipschitz: 1.0,
                smoothness: 0.0,
                sigma_g,
                sigma_h: 0.0,
                mu: 0.0,
            },
            noise_variance: v,
            rho,
            optimum_norm: 0.0,
            pf: None,
        }
    }

    #[test]
    fn vanishes_without_noise_or_regret() {
        let b = theoretical_gap_bound(VariantMode::Plain, &inputs(0.0, f64::INFINITY, 1.0), 64, 0.0).unwrap();
        assert_eq!(b, 0.0);
    }

    #[test]
    fn statistical_term() {
        for t in [4usize, 100, 1024] {
            let b = theoretical_gap_bound(VariantMode::Plain, &inputs(1.0, f64::INFINITY, 1.0), t, 0.0).unwrap();
            let expect = 8.0 / (2.0 * t as f64).sqrt();
            assert!((b - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn privacy_term() {
        let b = theoretical_gap_bound(VariantMode::Plain, &inputs(0.0, 1.0, 4.0), 16, 0.0).unwrap();
        let expect = 8.0 * 8f64.sqrt() * 32f64.log2() / (2f64.sqrt() * 16.0);
        assert!((b - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn strongly_convex_needs_mu() {
        assert!(theoretical_gap_bound(VariantMode::StronglyConvex, &inputs(1.0, 1.0, 1.0), 16, 0.0).is_err());
    }
}
