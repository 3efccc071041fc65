use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(alpha, eps_rdp)`-RDP implies `(eps_rdp + ln(1/delta)/(alpha - 1), delta)`-DP.
pub fn rdp_to_dp(alpha: f64, eps_rdp: f64, delta: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::invalid("alpha", format!("must exceed 1, got {alpha}")));
    }
    check_delta(delta)?;
    Ok(eps_rdp + (1.0 / delta).ln() / (alpha - 1.0))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `{1 + 2^j / 8 : j = 0..12}`
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=12).map(|j| 1.0 + f64::powi(2.0, j) / 8.0).collect()
}

/// Order minimizing `alpha rho^2 / 2 + ln(1/delta)/(alpha - 1)`.
pub fn optimal_alpha(rho: f64, delta: f64) -> f64 {
    1.0 + (2.0 * (1.0 / delta).ln()).sqrt() / rho
}

/// Exact minimum over all `alpha > 1`: `rho^2/2 + rho sqrt(2 ln(1/delta))`.
pub fn optimal_epsilon(rho: f64, delta: f64) -> f64 {
    rho * rho / 2.0 + rho * (2.0 * (1.0 / delta).ln()).sqrt()
}

/// The simplified conversion `2 rho sqrt(ln(1/delta))`.
pub fn closed_form_epsilon(rho: f64, delta: f64) -> f64 {
    2.0 * rho * (1.0 / delta).ln().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    /// `f64::INFINITY` marks the non-private mode.
    pub rho: f64,
    pub delta: f64,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
}

impl PrivacyBudget {
    pub fn new(rho: f64, delta: f64) -> Result<Self> {
        let b = PrivacyBudget {
            rho,
            delta,
            alpha_grid: default_alpha_grid(),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        crate::tree_noise::validate_rho(self.rho)?;
        check_delta(self.delta)?;
        if self.alpha_grid.is_empty() {
            return Err(Error::invalid("alpha_grid", "must not be empty"));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(**a > 1.0) || !a.is_finite()) {
            return Err(Error::invalid("alpha_grid", format!("orders must be finite and exceed 1, got {a}")));
        }
        Ok(())
    }

    pub fn is_private(&self) -> bool {
        self.rho.is_finite()
    }
}

/// Minimum of `rdp_to_dp(alpha, alpha rho^2 / 2, delta)` over the grid,
/// with the minimizing order. A grid that misses the continuous optimum is
/// widened geometrically until it brackets it.
pub fn budget_over_grid_with_alpha(budget: &PrivacyBudget) -> Result<(f64, f64)> {
    budget.validate()?;
    if !budget.is_private() {
        return Ok((f64::INFINITY, f64::NAN));
    }
    let star = optimal_alpha(budget.rho, budget.delta);
    let mut grid = budget.alpha_grid.clone();
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo <= star && star <= hi) {
        log::warn!("alpha grid [{lo}, {hi}] misses the optimum {star}; widening");
        let mut a = hi;
        while a < star {
            a = 1.0 + 2.0 * (a - 1.0);
            grid.push(a);
        }
        let mut a = lo;
        while a > star {
            a = 1.0 + (a - 1.0) / 2.0;
            grid.push(a);
        }
    }
    let mut best = (f64::INFINITY, f64::NAN);
    for &alpha in &grid {
        let eps = rdp_to_dp(alpha, alpha * budget.rho * budget.rho / 2.0, budget.delta)?;
        if eps < best.0 {
            best = (eps, alpha);
        }
    }
    Ok(best)
}

pub fn budget_over_grid(budget: &PrivacyBudget) -> Result<f64> {
    budget_over_grid_with_alpha(budget).map(|(eps, _)| eps)
}

/// JSON budget summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    #[serde(with = "nonfinite")]
    pub rho: f64,
    pub delta: f64,
    #[serde(with = "nonfinite")]
    pub alpha_star: f64,
    #[serde(with = "nonfinite")]
    pub epsilon: f64,
    #[serde(rename = "per_node_max_IN")]
    pub per_node_max_in: usize,
}

/// JSON has no infinities; non-finite values travel as strings.
mod nonfinite {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => s.parse().map_err(D::Error::custom),
        }
    }
}

/// Budget report for a horizon-`T` tree; `per_node_max_IN` is the largest
/// number of nodes any round contributes to.
pub fn budget_report(budget: &PrivacyBudget, horizon: usize) -> Result<BudgetReport> {
    let (epsilon, alpha_star) = budget_over_grid_with_alpha(budget)?;
    Ok(BudgetReport {
        rho: budget.rho,
        delta: budget.delta,
        alpha_star,
        epsilon,
        per_node_max_in: super::composition::max_in_set(horizon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_example() {
        let eps = rdp_to_dp(2.0, 1.0, 0.01).unwrap();
        assert!((eps - (1.0 + 100f64.ln())).abs() < 1e-12);
        assert!((eps - 5.605).abs() < 1e-3);
    }

    #[test]
    fn delta_near_one_recovers_rdp() {
        let eps = rdp_to_dp(3.0, 0.7, 1.0 - 1e-12).unwrap();
        assert!((eps - 0.7).abs() < 1e-11);
    }

    #[test]
    fn rejects_invalid() {
        assert!(rdp_to_dp(1.0, 1.0, 0.1).is_err());
        assert!(rdp_to_dp(2.0, 1.0, 0.0).is_err());
        assert!(rdp_to_dp(2.0, 1.0, 1.0).is_err());
        assert!(PrivacyBudget::new(0.0, 0.1).is_err());
    }

    #[test]
    fn unit_rho_at_inverse_e() {
        let b = PrivacyBudget::new(1.0, (-1f64).exp()).unwrap();
        let eps = budget_over_grid(&b).unwrap();
        assert!((2.0..=2.001).contains(&eps), "{eps}");
    }

    #[test]
    fn dense_grid_reaches_exact_optimum() {
        let mut b = PrivacyBudget::new(0.5, 1e-5).unwrap();
        b.alpha_grid = (1..=200_000).map(|i| 1.0 + i as f64 * 1e-3).collect();
        let eps = budget_over_grid(&b).unwrap();
        let exact = optimal_epsilon(0.5, 1e-5);
        assert!(eps >= exact - 1e-12 && eps - exact < 1e-6);
        // the simplified form upper-bounds the optimum
        assert!(closed_form_epsilon(0.5, 1e-5) >= exact);
    }

    #[test]
    fn non_private_is_infinite() {
        let b = PrivacyBudget::new(f64::INFINITY, 1e-5).unwrap();
        assert_eq!(budget_over_grid(&b).unwrap(), f64::INFINITY);
    }

    #[test]
    fn report_round_trips_non_private() {
        let b = PrivacyBudget::new(f64::INFINITY, 1e-5).unwrap();
        let r = budget_report(&b, 64).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"epsilon\":\"inf\""));
        let back: BudgetReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.epsilon, f64::INFINITY);
        assert_eq!(back.per_node_max_in, 7);
    }

    #[test]
    fn widens_narrow_grids() {
        let mut b = PrivacyBudget::new(0.1, 1e-8).unwrap();
        b.alpha_grid = vec![1.5, 2.0];
        let eps = budget_over_grid(&b).unwrap();
        assert!(eps <= optimal_epsilon(0.1, 1e-8) * 1.1);
    }
}
