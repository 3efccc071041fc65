use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::vector::{add, dist2, norm2};
use crate::tree_noise::log2_2t;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantMode {
    Plain,
    Optimistic,
    StronglyConvex,
    ParameterFree,
}

impl VariantMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VariantMode::Plain => "plain",
            VariantMode::Optimistic => "optimistic",
            VariantMode::StronglyConvex => "strongly_convex",
            VariantMode::ParameterFree => "parameter_free",
        }
    }
}

impl std::str::FromStr for VariantMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "plain" => VariantMode::Plain,
            "optimistic" => VariantMode::Optimistic,
            "strongly_convex" | "sc" => VariantMode::StronglyConvex,
            "parameter_free" | "pf" => VariantMode::ParameterFree,
            other => return Err(Error::invalid("variant", format!("unknown variant `{other}`"))),
        })
    }
}

fn default_delta_prob() -> f64 {
    0.1
}

fn default_c() -> f64 {
    1.0
}

/// Variant selection plus the parameters only some variants read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub mode: VariantMode,
    pub k: u32,
    /// Strong convexity of the population loss (strongly convex variant).
    #[serde(default)]
    pub mu: Option<f64>,
    /// Failure probability of the parameter-free guarantees.
    #[serde(default = "default_delta_prob")]
    pub delta_prob: f64,
    /// Concentration constant of the parameter-free analysis.
    #[serde(default = "default_c")]
    pub c: f64,
}

impl VariantConfig {
    pub fn plain(k: u32) -> Self {
        VariantConfig {
            mode: VariantMode::Plain,
            k,
            mu: None,
            delta_prob: default_delta_prob(),
            c: default_c(),
        }
    }

    pub fn optimistic(k: u32) -> Self {
        VariantConfig {
            mode: VariantMode::Optimistic,
            ..Self::plain(k)
        }
    }

    pub fn strongly_convex(k: u32, mu: f64) -> Self {
        VariantConfig {
            mode: VariantMode::StronglyConvex,
            mu: Some(mu),
            ..Self::plain(k)
        }
    }

    /// Always uses `k = 3`.
    pub fn parameter_free(delta_prob: f64, c: f64) -> Self {
        VariantConfig {
            mode: VariantMode::ParameterFree,
            k: 3,
            mu: None,
            delta_prob,
            c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "weight exponent must be at least 1"));
        }
        match self.mode {
            VariantMode::StronglyConvex => match self.mu {
                Some(mu) if mu > 0.0 && mu.is_finite() => {}
                other => {
                    return Err(Error::invalid(
                        "mu",
                        format!("strongly convex variant needs mu > 0, got {other:?}"),
                    ))
                }
            },
            VariantMode::ParameterFree => {
                if self.k != 3 {
                    return Err(Error::invalid("k", format!("parameter-free variant uses k = 3, got {}", self.k)));
                }
                if !(self.delta_prob > 0.0 && self.delta_prob < 1.0) {
                    return Err(Error::invalid("delta_prob", "must lie in (0, 1)"));
                }
                if !(self.c > 0.0) {
                    return Err(Error::invalid("c", "must be positive"));
                }
            }
            VariantMode::Plain | VariantMode::Optimistic => {}
        }
        Ok(())
    }
}

/// Regularization and cap constants of the parameter-free variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfConstants {
    pub kappa: f64,
    pub phi: f64,
    pub a: f64,
    pub a_prime: f64,
    pub g: f64,
    pub h: f64,
    pub diameter: f64,
    pub rho: f64,
    pub horizon: usize,
}

/// `kappa = 1 + DH/G`, `Phi = sqrt(ln(20 d T ln(2 kappa T) / delta))`,
/// `A = 8 sqrt(2) C^2`, `A' = 8 sqrt(d) sigma_D C^2`.
#[allow(clippy::too_many_arguments)]
pub fn pf_constants(
    g: f64,
    h: f64,
    diameter: f64,
    dim: usize,
    horizon: usize,
    delta_prob: f64,
    c: f64,
    sigma_d: f64,
    rho: f64,
) -> Result<PfConstants> {
    if !(g > 0.0) {
        return Err(Error::invalid("G", format!("must be positive, got {g}")));
    }
    if !(delta_prob > 0.0 && delta_prob < 1.0) {
        return Err(Error::invalid("delta_prob", format!("must lie in (0, 1), got {delta_prob}")));
    }
    if !(c > 0.0) {
        return Err(Error::invalid("C", "must be positive"));
    }
    if horizon == 0 || dim == 0 {
        return Err(Error::invalid("T/d", "must be at least 1"));
    }
    crate::tree_noise::validate_rho(rho)?;
    let kappa = 1.0 + diameter * h / g;
    let t = horizon as f64;
    let phi = (20.0 * dim as f64 * t * (2.0 * kappa * t).ln() / delta_prob).ln().sqrt();
    Ok(PfConstants {
        kappa,
        phi,
        a: 8.0 * std::f64::consts::SQRT_2 * c * c,
        a_prime: 8.0 * (dim as f64).sqrt() * sigma_d * c * c,
        g,
        h,
        diameter,
        rho,
        horizon,
    })
}

impl PfConstants {
    fn noise_term(&self, t: f64) -> f64 {
        if self.rho.is_infinite() {
            0.0
        } else {
            self.a_prime * (self.g + self.diameter * self.h) * self.phi * log2_2t(self.horizon) * t * t / self.rho
        }
    }

    /// `xi_t = A G Phi t^{5/2} + A' (G + DH) Phi log2(2T) t^2 / rho`
    pub fn xi(&self, t: usize) -> f64 {
        let t = t as f64;
        self.a * self.g * self.phi * t.powf(2.5) + self.noise_term(t)
    }

    /// `nu_t = 28 A H Phi t^{5/2}`
    pub fn nu(&self, t: usize) -> f64 {
        28.0 * self.a * self.h * self.phi * (t as f64).powf(2.5)
    }

    /// High-probability bound on `||g_bar_t||`.
    pub fn cap(&self, t: usize) -> f64 {
        let tf = t as f64;
        self.g * tf.powi(3)
            + self.a * (2.0 * self.g + 57.0 * self.diameter * self.h) * self.phi * tf.powf(2.5)
            + 2.0 * self.noise_term(tf)
    }
}

/// `g_bar = g + gamma`
pub fn loss_gradient_plain(g: &[f64], gamma: &[f64]) -> Vec<f64> {
    add(g, gamma)
}

/// Hint for round `t`: the previous round's `g_bar`, zero at `t = 1`.
pub fn hint_provider(previous: Option<&[f64]>, dim: usize) -> Vec<f64> {
    previous.map_or_else(|| vec![0.0; dim], <[f64]>::to_vec)
}

/// Gradient at `w` of `<g + gamma, w> + (beta_t mu / 4) ||w - x_t||^2`.
pub fn loss_gradient_sc(g: &[f64], gamma: &[f64], w: &[f64], x_t: &[f64], beta_t: f64, mu: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
    }
    let mut out = add(g, gamma);
    let c = beta_t * mu / 2.0;
    for ((o, wi), xi) in out.iter_mut().zip(w).zip(x_t) {
        *o += c * (wi - xi);
    }
    Ok(out)
}

/// Subgradient at `w` of `<g + gamma, w> + xi ||w - c|| + nu ||w - c||^2`,
/// taking the zero subgradient of the norm at `w = c`.
pub fn loss_gradient_pf(g: &[f64], gamma: &[f64], w: &[f64], center: &[f64], xi: f64, nu: f64) -> Vec<f64> {
    let mut out = add(g, gamma);
    let r = dist2(w, center);
    for ((o, wi), ci) in out.iter_mut().zip(w).zip(center) {
        let off = wi - ci;
        if r > 0.0 {
            *o += xi * off / r;
        }
        *o += 2.0 * nu * off;
    }
    out
}

/// Rescales `v` onto the ball of radius `cap`; returns whether it clipped.
pub fn clip_to(v: &mut [f64], cap: f64) -> bool {
    let n = norm2(v);
    if n > cap {
        let s = cap / n;
        v.iter_mut().for_each(|x| *x *= s);
        true
    } else {
        false
    }
}
