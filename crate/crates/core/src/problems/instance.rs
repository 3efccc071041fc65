use std::path::Path;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ball::Ball;
use super::dataset::{Dataset, Datum};
use crate::geometry::vector::{axpy, dist2, dot, norm2, norm2_sq};
use crate::geometry::Rng;
use crate::error::{Error, Result};

/// Analytic constants of an instance, in the roles they play in the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Diameter `D` of the domain.
    pub diameter: f64,
    /// Lipschitz constant `G` of `l(., z)`.
    pub lipschitz: f64,
    /// Smoothness `H` of `l(., z)`.
    pub smoothness: f64,
    pub sigma_g: f64,
    pub sigma_h: f64,
    /// Strong convexity of the population loss, 0 if merely convex.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyParams {
    /// `l(x, z) = (H/2) ||x - x* - z||^2`, `z` a scaled Rademacher vector.
    Quadratic { noise_radius: f64 },
    /// `l(x, (a, y)) = log(1 + exp(-y <a, x>))` over a finite pool.
    Logistic { feature_radius: f64, pool_size: usize },
}

/// Replayable JSON form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    #[serde(flatten)]
    pub family: FamilyParams,
    pub dim: usize,
    pub seed: u64,
    pub center: Vec<f64>,
    pub constants: Constants,
    pub optimum: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Family {
    Quadratic { noise_radius: f64 },
    Logistic { feature_radius: f64, pool: Arc<Vec<Datum>> },
}

/// Stochastic convex problem with exact constants and a known minimizer.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    family: Family,
    dim: usize,
    seed: u64,
    domain: Ball,
    constants: Constants,
    optimum: Vec<f64>,
}

const QUADRATIC_OPTIMUM_FRACTION: f64 = 0.3;
const LOGISTIC_POOL: usize = 4096;

impl ProblemInstance {
    /// Quadratic family with `x*` at distance `0.3 D` from the center.
    pub fn quadratic(dim: usize, diameter: f64, smoothness: f64, sigma_g: f64, seed: u64) -> Result<Self> {
        Self::quadratic_with_offset(dim, diameter, smoothness, sigma_g, QUADRATIC_OPTIMUM_FRACTION * diameter, seed)
    }

    /// Quadratic family with `||x* - center|| = optimum_distance`.
    pub fn quadratic_with_offset(
        dim: usize,
        diameter: f64,
        smoothness: f64,
        sigma_g: f64,
        optimum_distance: f64,
        seed: u64,
    ) -> Result<Self> {
        validate_common(dim, diameter)?;
        if !(smoothness > 0.0) {
            return Err(Error::invalid("H", format!("must be positive, got {smoothness}")));
        }
        if !(sigma_g >= 0.0) {
            return Err(Error::invalid("sigma_G", format!("must be non-negative, got {sigma_g}")));
        }
        if !(0.0..=diameter / 2.0).contains(&optimum_distance) {
            return Err(Error::invalid(
                "optimum_distance",
                format!("must lie in [0, D/2 = {}], got {optimum_distance}", diameter / 2.0),
            ));
        }
        let mut rng = Rng::new(seed).split(0);
        let dir = random_unit(dim, &mut rng);
        let optimum: Vec<f64> = dir.iter().map(|v| v * optimum_distance).collect();
        let noise_radius = sigma_g / smoothness;
        let constants = Constants {
            diameter,
            lipschitz: smoothness * (diameter + noise_radius),
            smoothness,
            sigma_g,
            sigma_h: 0.0,
            mu: smoothness,
        };
        Ok(ProblemInstance {
            family: Family::Quadratic { noise_radius },
            dim,
            seed,
            domain: Ball::centered(dim, diameter / 2.0),
            constants,
            optimum,
        })
    }

    /// Logistic regression over a seeded pool of `4096` labelled points with
    /// `||a|| <= 1`. The population is the uniform distribution on the pool,
    /// so `L` and its minimizer are exact.
    pub fn logistic(dim: usize, diameter: f64, seed: u64) -> Result<Self> {
        Self::logistic_with(dim, diameter, 1.0, LOGISTIC_POOL, seed)
    }

    pub fn logistic_with(dim: usize, diameter: f64, feature_radius: f64, pool_size: usize, seed: u64) -> Result<Self> {
        validate_common(dim, diameter)?;
        if !(feature_radius > 0.0) {
            return Err(Error::invalid("feature_radius", "must be positive"));
        }
        if pool_size == 0 {
            return Err(Error::invalid("pool_size", "must be positive"));
        }
        let pool = logistic_pool(dim, diameter, feature_radius, pool_size, seed);
        let domain = Ball::centered(dim, diameter / 2.0);
        let optimum = logistic_minimizer(&pool, &domain, feature_radius * feature_radius / 4.0);
        Ok(Self::logistic_from_parts(dim, diameter, feature_radius, pool, optimum, seed))
    }

    fn logistic_from_parts(
        dim: usize,
        diameter: f64,
        feature_radius: f64,
        pool: Vec<Datum>,
        optimum: Vec<f64>,
        seed: u64,
    ) -> Self {
        let g = feature_radius;
        let h = feature_radius * feature_radius / 4.0;
        ProblemInstance {
            family: Family::Logistic {
                feature_radius,
                pool: Arc::new(pool),
            },
            dim,
            seed,
            domain: Ball::centered(dim, diameter / 2.0),
            constants: Constants {
                diameter,
                lipschitz: g,
                smoothness: h,
                // variance and difference-variance are dominated by the
                // second moments, which the Lipschitz/smoothness caps bound
                sigma_g: g,
                sigma_h: h,
                mu: 0.0,
            },
            optimum,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> &Ball {
        &self.domain
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    pub fn optimum(&self) -> &[f64] {
        &self.optimum
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Quadratic { .. } => "quadratic",
            Family::Logistic { .. } => "logistic",
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Datum {
        match &self.family {
            Family::Quadratic { noise_radius } => {
                let scale = noise_radius / (self.dim as f64).sqrt();
                let features = (0..self.dim)
                    .map(|_| if rng.random_bool(0.5) { scale } else { -scale })
                    .collect();
                Datum { features, label: 0.0 }
            }
            Family::Logistic { pool, .. } => pool[rng.random_range(0..pool.len())].clone(),
        }
    }

    pub fn sample_dataset(&self, len: usize, rng: &mut Rng) -> Dataset {
        Dataset::new((0..len).map(|_| self.sample(rng)).collect())
    }

    pub fn loss(&self, x: &[f64], z: &Datum) -> f64 {
        match &self.family {
            Family::Quadratic { .. } => {
                let h = self.constants.smoothness;
                let r: f64 = x
                    .iter()
                    .zip(&self.optimum)
                    .zip(&z.features)
                    .map(|((xi, oi), zi)| (xi - oi - zi).powi(2))
                    .sum();
                0.5 * h * r
            }
            Family::Logistic { .. } => softplus(-z.label * dot(&z.features, x)),
        }
    }

    pub fn grad_into(&self, x: &[f64], z: &Datum, out: &mut [f64]) {
        match &self.family {
            Family::Quadratic { .. } => {
                let h = self.constants.smoothness;
                for (((o, xi), oi), zi) in out.iter_mut().zip(x).zip(&self.optimum).zip(&z.features) {
                    *o = h * (xi - oi - zi);
                }
            }
            Family::Logistic { .. } => {
                let s = -z.label * sigmoid(-z.label * dot(&z.features, x));
                for (o, a) in out.iter_mut().zip(&z.features) {
                    *o = s * a;
                }
            }
        }
    }

    pub fn grad(&self, x: &[f64], z: &Datum) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.grad_into(x, z, &mut out);
        out
    }

    /// Population loss `L(x)`.
    pub fn population_loss(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::Quadratic { noise_radius } => {
                let h = self.constants.smoothness;
                0.5 * h * (dist2(x, &self.optimum).powi(2) + noise_radius * noise_radius)
            }
            Family::Logistic { pool, .. } => {
                pool.iter().map(|z| self.loss(x, z)).sum::<f64>() / pool.len() as f64
            }
        }
    }

    pub fn population_gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.family {
            Family::Quadratic { .. } => {
                let h = self.constants.smoothness;
                x.iter().zip(&self.optimum).map(|(a, b)| h * (a - b)).collect()
            }
            Family::Logistic { pool, .. } => logistic_full_gradient(pool, x),
        }
    }

    /// `L(x) - L(x*)`, clamped at the numerical floor `-1e-10`.
    pub fn population_gap(&self, x: &[f64]) -> f64 {
        let gap = match &self.family {
            Family::Quadratic { .. } => 0.5 * self.constants.smoothness * dist2(x, &self.optimum).powi(2),
            Family::Logistic { .. } => self.population_loss(x) - self.population_loss(&self.optimum),
        };
        gap.max(-1e-10)
    }

    /// Monte-Carlo estimate of the gap from `n` fresh draws, with its
    /// standard error.
    pub fn monte_carlo_gap(&self, x: &[f64], n: usize, rng: &mut Rng) -> (f64, f64) {
        let diffs: Vec<f64> = (0..n)
            .map(|_| {
                let z = self.sample(rng);
                self.loss(x, &z) - self.loss(&self.optimum, &z)
            })
            .collect();
        let mean = diffs.iter().sum::<f64>() / n as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }

    pub fn descriptor(&self) -> InstanceDescriptor {
        let family = match &self.family {
            Family::Quadratic { noise_radius } => FamilyParams::Quadratic {
                noise_radius: *noise_radius,
            },
            Family::Logistic { feature_radius, pool } => FamilyParams::Logistic {
                feature_radius: *feature_radius,
                pool_size: pool.len(),
            },
        };
        InstanceDescriptor {
            family,
            dim: self.dim,
            seed: self.seed,
            center: self.domain.center.clone(),
            constants: self.constants,
            optimum: self.optimum.clone(),
        }
    }

    /// Rebuilds an instance; the logistic pool is regenerated from the seed
    /// and the cached optimum is reused.
    pub fn from_descriptor(desc: &InstanceDescriptor) -> Result<Self> {
        let d = desc.constants.diameter;
        validate_common(desc.dim, d)?;
        if desc.optimum.len() != desc.dim {
            return Err(Error::invalid("optimum", "dimension mismatch"));
        }
        match desc.family {
            FamilyParams::Quadratic { noise_radius } => {
                let h = desc.constants.smoothness;
                let mut inst = Self::quadratic(desc.dim, d, h, noise_radius * h, desc.seed)?;
                inst.optimum = desc.optimum.clone();
                if dist2(&inst.optimum, &inst.domain.center) > d / 2.0 {
                    return Err(Error::invalid("optimum", "outside the domain"));
                }
                Ok(inst)
            }
            FamilyParams::Logistic {
                feature_radius,
                pool_size,
            } => {
                let pool = logistic_pool(desc.dim, d, feature_radius, pool_size, desc.seed);
                Ok(Self::logistic_from_parts(
                    desc.dim,
                    d,
                    feature_radius,
                    pool,
                    desc.optimum.clone(),
                    desc.seed,
                ))
            }
        }
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(&self.descriptor())?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_descriptor(&serde_json::from_str(&s)?)
    }
}

/// Euclidean projection onto the instance domain.
pub fn project(x: &[f64], instance: &ProblemInstance) -> Vec<f64> {
    instance.domain().project(x)
}

/// `L(x) - L(x*)` for the instance.
pub fn population_gap(instance: &ProblemInstance, x: &[f64]) -> f64 {
    instance.population_gap(x)
}

fn validate_common(dim: usize, diameter: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if !(diameter > 0.0) || !diameter.is_finite() {
        return Err(Error::invalid("D", format!("must be positive and finite, got {diameter}")));
    }
    Ok(())
}

fn random_unit(dim: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm2(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(u))` without overflow.
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn logistic_pool(dim: usize, diameter: f64, radius: f64, n: usize, seed: u64) -> Vec<Datum> {
    let mut rng = Rng::new(seed).split(1);
    let truth: Vec<f64> = random_unit(dim, &mut rng).into_iter().map(|v| v * diameter / 4.0).collect();
    (0..n)
        .map(|_| {
            let dir = random_unit(dim, &mut rng);
            let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
            let features: Vec<f64> = dir.into_iter().map(|v| v * r).collect();
            let p = sigmoid(dot(&features, &truth));
            let label = if rng.random_bool(p) { 1.0 } else { -1.0 };
            Datum { features, label }
        })
        .collect()
}

fn logistic_full_gradient(pool: &[Datum], x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for z in pool {
        let s = -z.label * sigmoid(-z.label * dot(&z.features, x));
        axpy(s, &z.features, &mut g);
    }
    let n = pool.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

/// Accelerated projected gradient descent (FISTA with restarts) on the pool
/// average, run to stationarity of the projected-gradient map.
fn logistic_minimizer(pool: &[Datum], domain: &Ball, smoothness: f64) -> Vec<f64> {
    let step = 1.0 / smoothness;
    let mut x = domain.center.clone();
    let mut y = x.clone();
    let mut theta: f64 = 1.0;
    for _ in 0..200_000 {
        let g = logistic_full_gradient(pool, &y);
        let mut next = y.clone();
        axpy(-step, &g, &mut next);
        domain.project_in_place(&mut next);
        let moved = dist2(&next, &x);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let restart = dot(
            &y.iter().zip(&next).map(|(a, b)| a - b).collect::<Vec<_>>(),
            &next.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>(),
        ) > 0.0;
        let momentum = if restart { 0.0 } else { (theta - 1.0) / theta_next };
        y = next.iter().zip(&x).map(|(n, o)| n + momentum * (n - o)).collect();
        theta = if restart { 1.0 } else { theta_next };
        x = next;
        if moved < 1e-14 && norm2_sq(&g) >= 0.0 {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gap_closed_form() {
        let inst = ProblemInstance::quadratic(2, 2.0, 1.0, 0.3, 1).unwrap();
        let mut x = inst.optimum().to_vec();
        // move distance 1 toward the center; x* is 0.6 from the center so
        // pick a direction that stays inside
        let n = norm2(&x);
        x.iter_mut().for_each(|v| *v -= *v / n);
        assert!((dist2(&x, inst.optimum()) - 1.0).abs() < 1e-12);
        assert!((inst.population_gap(&x) - 0.5).abs() < 1e-12);
        assert_eq!(inst.population_gap(inst.optimum()), 0.0);
    }

    #[test]
    fn quadratic_gap_equals_loss_difference() {
        let inst = ProblemInstance::quadratic(4, 3.0, 2.0, 0.7, 9).unwrap();
        let x = [0.1, -0.2, 0.3, 0.05];
        let d = inst.population_loss(&x) - inst.population_loss(inst.optimum());
        assert!((d - inst.population_gap(&x)).abs() < 1e-12);
    }

    #[test]
    fn zero_sigma_gives_deterministic_gradients() {
        let inst = ProblemInstance::quadratic(3, 2.0, 1.5, 0.0, 2).unwrap();
        let mut rng = Rng::new(0);
        let x = [0.2, 0.1, -0.3];
        let g0 = inst.grad(&x, &inst.sample(&mut rng));
        for _ in 0..20 {
            assert_eq!(inst.grad(&x, &inst.sample(&mut rng)), g0);
        }
        assert_eq!(g0, inst.population_gradient(&x));
    }

    #[test]
    fn population_gradient_vanishes_at_optimum() {
        let inst = ProblemInstance::quadratic(5, 2.0, 1.0, 0.5, 3).unwrap();
        assert!(norm2(&inst.population_gradient(inst.optimum())) == 0.0);
    }

    #[test]
    fn optimum_placement() {
        let inst = ProblemInstance::quadratic(6, 4.0, 1.0, 0.1, 5).unwrap();
        let r = dist2(inst.optimum(), &inst.domain().center);
        assert!((1.0 - 1e-12..=2.0).contains(&r));
        assert!(ProblemInstance::quadratic_with_offset(2, 2.0, 1.0, 0.0, 1.5, 0).is_err());
    }

    #[test]
    fn quadratic_noise_variance_is_sigma_g() {
        let inst = ProblemInstance::quadratic(7, 2.0, 2.0, 0.8, 4).unwrap();
        let mut rng = Rng::new(1);
        let x = [0.0; 7];
        let pg = inst.population_gradient(&x);
        for _ in 0..50 {
            let g = inst.grad(&x, &inst.sample(&mut rng));
            assert!((dist2(&g, &pg) - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_quadratic_parameters() {
        assert!(ProblemInstance::quadratic(0, 1.0, 1.0, 0.0, 0).is_err());
        assert!(ProblemInstance::quadratic(1, 0.0, 1.0, 0.0, 0).is_err());
        assert!(ProblemInstance::quadratic(1, 1.0, -1.0, 0.0, 0).is_err());
        assert!(ProblemInstance::quadratic(1, 1.0, 1.0, -0.1, 0).is_err());
    }

    #[test]
    fn logistic_loss_at_origin_is_log2() {
        let inst = ProblemInstance::logistic_with(3, 2.0, 1.0, 64, 0).unwrap();
        let mut rng = Rng::new(2);
        for _ in 0..10 {
            let z = inst.sample(&mut rng);
            assert!((inst.loss(&[0.0; 3], &z) - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn logistic_gradient_saturates() {
        let inst = ProblemInstance::logistic_with(2, 2.0, 1.0, 16, 0).unwrap();
        let z = Datum { features: vec![1.0, 0.0], label: 1.0 };
        let mut prev = f64::INFINITY;
        for s in [1.0, 10.0, 50.0, 500.0] {
            let n = norm2(&inst.grad(&[s, 0.0], &z));
            assert!(n < prev);
            prev = n;
        }
        assert!(prev < 1e-100);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-12);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
    }

    #[test]
    fn descriptor_round_trip() {
        let q = ProblemInstance::quadratic(3, 2.0, 1.0, 0.2, 8).unwrap();
        let back = ProblemInstance::from_descriptor(
            &serde_json::from_str(&serde_json::to_string(&q.descriptor()).unwrap()).unwrap(),
        )
        .unwrap();
        assert_eq!(back.descriptor(), q.descriptor());

        let l = ProblemInstance::logistic_with(2, 2.0, 1.0, 128, 8).unwrap();
        let back = ProblemInstance::from_descriptor(&l.descriptor()).unwrap();
        assert_eq!(back.descriptor(), l.descriptor());
        assert_eq!(back.population_loss(&[0.1, 0.2]), l.population_loss(&[0.1, 0.2]));
    }
}
