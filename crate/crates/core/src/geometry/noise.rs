use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::Rng;
use super::vector::norm2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Standard multivariate normal, a (d, alpha)-RDP distribution for every alpha.
    GaussianRdp,
    /// Density proportional to `exp(-||x||_2)`; gives pure DP.
    ExponentialPureDp,
}

/// Base noise distribution `D` that the tree scales by `sigma_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDistribution {
    pub kind: NoiseKind,
    dim: usize,
}

impl NoiseDistribution {
    pub fn new(kind: NoiseKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "noise dimension must be at least 1"));
        }
        Ok(NoiseDistribution { kind, dim })
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(NoiseKind::GaussianRdp, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Second-moment constant `V >= E||R||^2`.
    ///
    /// For the exponential density the radius is Gamma(d, 1), so
    /// `E||R||^2 = d (d + 1)`.
    pub fn rdp_variance(&self) -> f64 {
        let d = self.dim as f64;
        match self.kind {
            NoiseKind::GaussianRdp => d,
            NoiseKind::ExponentialPureDp => d * (d + 1.0),
        }
    }

    /// Sub-Gaussian parameter of `sup_{||a||=1} <R, a>`; `None` when the
    /// distribution has heavier tails.
    pub fn sub_gaussian_sigma(&self) -> Option<f64> {
        match self.kind {
            NoiseKind::GaussianRdp => Some(1.0),
            NoiseKind::ExponentialPureDp => None,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match self.kind {
            NoiseKind::GaussianRdp => {
                for v in out.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
            }
            NoiseKind::ExponentialPureDp => {
                // radius ~ Gamma(d, 1) times a uniform direction
                let radius_dist =
                    Gamma::new(self.dim as f64, 1.0).expect("dim >= 1 gives a valid Gamma shape");
                let radius: f64 = radius_dist.sample(rng);
                let dir = loop {
                    for v in out.iter_mut() {
                        *v = StandardNormal.sample(rng);
                    }
                    let n = norm2(out);
                    if n > 0.0 {
                        break n;
                    }
                };
                for v in out.iter_mut() {
                    *v *= radius / dir;
                }
            }
        }
    }
}

/// Draws one sample of `dist` scaled by nothing; convenience free function.
pub fn sample_noise(dist: &NoiseDistribution, rng: &mut Rng) -> Vec<f64> {
    dist.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vector::norm2_sq;

    #[test]
    fn zero_dim_rejected() {
        assert!(NoiseDistribution::gaussian(0).is_err());
    }

    #[test]
    fn gaussian_mean_is_zero() {
        let dist = NoiseDistribution::gaussian(3).unwrap();
        let mut rng = Rng::new(11);
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let r = dist.sample(&mut rng);
            for (m, v) in mean.iter_mut().zip(&r) {
                *m += v / n as f64;
            }
        }
        // 4 standard errors of the norm of a 3-d mean: sqrt(3/n) * 4 ~ 0.022
        assert!(norm2(&mean) <= 0.02, "mean norm {}", norm2(&mean));
    }

    #[test]
    fn gaussian_second_moment_is_dim() {
        let dist = NoiseDistribution::gaussian(5).unwrap();
        let mut rng = Rng::new(12);
        let n = 100_000;
        let m: f64 = (0..n).map(|_| norm2_sq(&dist.sample(&mut rng))).sum::<f64>() / n as f64;
        assert!((4.8..=5.2).contains(&m), "E||R||^2 = {m}");
        assert!(m <= 1.1 * dist.rdp_variance());
    }

    /// Mean radius of the d-dimensional exponential density by direct
    /// quadrature of r * r^(d-1) e^(-r) / Gamma(d).
    fn exponential_mean_radius_quadrature(d: i32) -> f64 {
        let gamma_d: f64 = (1..d).map(f64::from).product();
        let (a, b, n) = (0.0, 80.0, 200_000);
        let h = (b - a) / n as f64;
        let f = |r: f64| r * r.powi(d - 1) * (-r).exp() / gamma_d;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    #[test]
    fn exponential_radius_mean_matches_quadrature() {
        let expected = exponential_mean_radius_quadrature(2);
        assert!((expected - 2.0).abs() < 1e-8);
        let dist = NoiseDistribution::new(NoiseKind::ExponentialPureDp, 2).unwrap();
        let mut rng = Rng::new(13);
        let n = 100_000;
        let m: f64 = (0..n).map(|_| norm2(&dist.sample(&mut rng))).sum::<f64>() / n as f64;
        assert!((1.9..=2.1).contains(&m), "E||R|| = {m}");
    }

    #[test]
    fn exponential_second_moment_matches_closed_form() {
        for d in [1usize, 3, 6] {
            let dist = NoiseDistribution::new(NoiseKind::ExponentialPureDp, d).unwrap();
            let mut rng = Rng::new(100 + d as u64);
            let n = 20_000;
            let samples: Vec<f64> = (0..n).map(|_| norm2_sq(&dist.sample(&mut rng))).collect();
            let m = samples.iter().sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((m - dist.rdp_variance()).abs() <= 4.0 * se, "d={d}: {m} vs {}", dist.rdp_variance());
            assert!(m <= 1.1 * dist.rdp_variance());
        }
    }

    #[test]
    fn exponential_mean_is_zero() {
        let dist = NoiseDistribution::new(NoiseKind::ExponentialPureDp, 2).unwrap();
        let mut rng = Rng::new(14);
        let n = 50_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let r = dist.sample(&mut rng);
            mean[0] += r[0] / n as f64;
            mean[1] += r[1] / n as f64;
        }
        // per-coordinate variance d(d+1)/d = 3, se = sqrt(3/n)
        assert!(norm2(&mean) <= 4.0 * (2.0 * 3.0 / n as f64).sqrt());
    }

    #[test]
    fn sampling_is_deterministic() {
        for kind in [NoiseKind::GaussianRdp, NoiseKind::ExponentialPureDp] {
            let dist = NoiseDistribution::new(kind, 4).unwrap();
            let mut a = Rng::new(99);
            let mut b = Rng::new(99);
            for _ in 0..100 {
                let (x, y) = (dist.sample(&mut a), dist.sample(&mut b));
                assert!(x.iter().zip(&y).all(|(p, q)| p.to_bits() == q.to_bits()));
            }
        }
    }
}
