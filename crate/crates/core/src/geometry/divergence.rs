//! Closed-form divergences for the shipped noise distributions.

use super::vector::dist2;
use crate::error::{Error, Result};

/// Rényi divergence `D_alpha(N(mu, sigma^2 I) || N(mu', sigma^2 I))`,
/// equal to `alpha ||mu - mu'||^2 / (2 sigma^2)`.
pub fn gaussian_renyi_divergence(mu: &[f64], mu_prime: &[f64], sigma: f64, alpha: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if !(alpha > 1.0) {
        return Err(Error::invalid("alpha", format!("must exceed 1, got {alpha}")));
    }
    check_dims(mu, mu_prime)?;
    let d = dist2(mu, mu_prime);
    Ok(alpha * d * d / (2.0 * sigma * sigma))
}

/// Pure-DP level `||mu - mu'|| / sigma` of the exponential density
/// `p(x) ∝ exp(-||x||)` scaled by `sigma`: the density ratio between the two
/// shifted copies never exceeds `exp` of this value.
pub fn pure_dp_density_ratio_bound(mu: &[f64], mu_prime: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    check_dims(mu, mu_prime)?;
    Ok(dist2(mu, mu_prime) / sigma)
}

/// Unnormalized log density of `sigma * R + mu` with `R ∝ exp(-||x||)`.
pub fn exponential_log_density(x: &[f64], mu: &[f64], sigma: f64) -> f64 {
    -dist2(x, mu) / sigma
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(
            "mu",
            format!("dimension mismatch: {} vs {}", a.len(), b.len()),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NoiseDistribution, NoiseKind, Rng};

    #[test]
    fn unit_shift() {
        assert_eq!(gaussian_renyi_divergence(&[0.0], &[1.0], 1.0, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn identical_means_give_zero() {
        for (s, a) in [(0.3, 1.01), (2.0, 7.0)] {
            assert_eq!(gaussian_renyi_divergence(&[1.0, 2.0], &[1.0, 2.0], s, a).unwrap(), 0.0);
        }
    }

    #[test]
    fn shift_three_sigma_two() {
        let v = gaussian_renyi_divergence(&[0.0], &[3.0], 2.0, 1.5).unwrap();
        assert!((v - 1.6875).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gaussian_renyi_divergence(&[0.0], &[1.0], 1.0, 1.0).is_err());
        assert!(gaussian_renyi_divergence(&[0.0], &[1.0], 0.0, 2.0).is_err());
        assert!(gaussian_renyi_divergence(&[0.0], &[1.0], -1.0, 2.0).is_err());
        assert!(gaussian_renyi_divergence(&[0.0], &[1.0, 2.0], 1.0, 2.0).is_err());
        assert!(pure_dp_density_ratio_bound(&[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn pure_dp_bound_examples() {
        assert_eq!(pure_dp_density_ratio_bound(&[1.0, 1.0], &[1.0, 1.0], 3.0).unwrap(), 0.0);
        assert_eq!(pure_dp_density_ratio_bound(&[0.0, 0.0], &[2.0, 0.0], 1.0).unwrap(), 2.0);
        assert_eq!(pure_dp_density_ratio_bound(&[0.0], &[1.0], 4.0).unwrap(), 0.25);
    }

    #[test]
    fn exponential_log_ratio_never_exceeds_bound() {
        let dist = NoiseDistribution::new(NoiseKind::ExponentialPureDp, 1).unwrap();
        let mut rng = Rng::new(5);
        for &(m0, m1, sigma) in &[(0.0, 1.0, 1.0), (-2.0, 0.5, 0.7), (3.0, 3.0, 2.0)] {
            let bound = pure_dp_density_ratio_bound(&[m0], &[m1], sigma).unwrap();
            for _ in 0..10_000 {
                let r = dist.sample(&mut rng);
                let x = [sigma * r[0] + m0];
                let log_ratio = exponential_log_density(&x, &[m0], sigma)
                    - exponential_log_density(&x, &[m1], sigma);
                assert!(log_ratio <= bound + 1e-9);
                assert!(-log_ratio <= bound + 1e-9);
            }
        }
    }
}
