use serde::{Deserialize, Serialize};

use super::vector::norm2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L2,
}

/// A norm on R^d together with the strong-convexity constant `lambda` of its
/// square. Only the Euclidean norm is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    pub lambda: f64,
}

impl NormSpec {
    pub const fn l2() -> Self {
        NormSpec {
            kind: NormKind::L2,
            lambda: 2.0,
        }
    }

    pub fn new(kind: NormKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        Ok(NormSpec { kind, lambda })
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match self.kind {
            NormKind::L2 => norm2(x),
        }
    }

    /// L2 is self-dual.
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        match self.kind {
            NormKind::L2 => norm2(g),
        }
    }
}

impl Default for NormSpec {
    fn default() -> Self {
        Self::l2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_is_self_dual() {
        let n = NormSpec::l2();
        let x = [3.0, -4.0];
        assert_eq!(n.norm(&x), 5.0);
        assert_eq!(n.dual_norm(&x), n.norm(&x));
    }

    #[test]
    fn rejects_non_positive_lambda() {
        assert!(NormSpec::new(NormKind::L2, 0.0).is_err());
        assert!(NormSpec::new(NormKind::L2, f64::NAN).is_err());
    }

    #[test]
    fn squared_l2_is_two_strongly_convex() {
        // ||y||^2 >= ||x||^2 + <2x, y-x> + (lambda/2)||y-x||^2 holds with equality for lambda = 2
        let x = [0.3, -1.2, 2.0];
        let y = [1.0, 0.5, -0.25];
        let lhs: f64 = y.iter().map(|v| v * v).sum();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let lin: f64 = x.iter().zip(&y).map(|(a, b)| 2.0 * a * (b - a)).sum();
        let d: f64 = x.iter().zip(&y).map(|(a, b)| (b - a) * (b - a)).sum();
        let rhs = nx + lin + NormSpec::l2().lambda / 2.0 * d;
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
