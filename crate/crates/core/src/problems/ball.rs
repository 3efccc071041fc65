use serde::{Deserialize, Serialize};

use crate::geometry::vector::dist2;

/// Closed Euclidean ball, the only constraint set used by the learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        debug_assert!(radius > 0.0);
        Ball { center, radius }
    }

    pub fn centered(dim: usize, radius: f64) -> Self {
        Ball::new(vec![0.0; dim], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist2(x, &self.center) <= self.radius * (1.0 + 1e-12)
    }

    /// Euclidean projection in place. Points already inside are untouched;
    /// projected points satisfy `dist <= radius` in floating point, so the
    /// map is idempotent.
    pub fn project_in_place(&self, x: &mut [f64]) {
        let r = dist2(x, &self.center);
        if r <= self.radius {
            return;
        }
        let mut s = self.radius / r;
        let offsets: Vec<f64> = x.iter().zip(&self.center).map(|(xi, ci)| xi - ci).collect();
        loop {
            for ((xi, ci), o) in x.iter_mut().zip(&self.center).zip(&offsets) {
                *xi = ci + s * o;
            }
            if dist2(x, &self.center) <= self.radius {
                return;
            }
            s *= 1.0 - f64::EPSILON;
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.project_in_place(&mut y);
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inside_is_identity() {
        let b = Ball::centered(2, 1.0);
        assert_eq!(b.project(&[0.3, -0.4]), vec![0.3, -0.4]);
    }

    #[test]
    fn unit_ball_projection() {
        let b = Ball::centered(2, 1.0);
        let p = b.project(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn twice_radius_lands_on_sphere() {
        let b = Ball::new(vec![1.0, -1.0, 2.0], 1.5);
        let x = [1.0 + 3.0, -1.0, 2.0];
        let p = b.project(&x);
        assert!((dist2(&p, &b.center) - 1.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_is_inside_and_idempotent(x in proptest::collection::vec(-10.0f64..10.0, 3)) {
            let b = Ball::new(vec![0.5, 0.0, -0.5], 2.0);
            let p = b.project(&x);
            prop_assert!(b.contains(&p));
            let q = b.project(&p);
            prop_assert_eq!(p, q);
        }
    }
}
