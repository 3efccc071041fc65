use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::compare::compare_variants;
use super::config::{ArmSpec, ExperimentConfig, InstanceSpec, PrivacySpec};
use super::oracles::{brute_index_set, brute_node_interval, literal_sigma_sq, renyi_quadrature_1d};
use super::suite::{fit_rate, mean, run_seed, run_suite, RunResult, DATA_STREAM};
use crate::accounting::{
    budget_over_grid, closed_form_epsilon, delta_sensitivity, sensitivity_probe, theoretical_gap_bound, BoundInputs,
    PrivacyBudget,
};
use crate::conversion::{pf_constants_for, Diagnostics, RunConfig, VariantConfig};
use crate::error::Result;
use crate::geometry::vector::{axpy, norm2_sq};
use crate::geometry::{gaussian_renyi_divergence, NoiseDistribution, NormSpec, Rng};
use crate::learners::LearnerKind;
use crate::problems::ProblemInstance;
use crate::tree_noise::{index_set, node_interval, sigma_sq_schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(crate::error::Error::invalid("level", format!("expected fast or full, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u128,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<28} {} ({} ms)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_ms
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

fn timed(id: u8, name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckResult {
        id,
        name,
        passed,
        detail,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// Monte-Carlo slack used by the expectation checks: four standard errors
/// of a mean over `n` trials, in relative terms.
pub fn mc_slack(n: usize) -> f64 {
    1.0 + 4.0 / (n as f64).sqrt()
}

/// Relative slack of the decomposition checks.
pub const DECOMPOSITION_REL_TOL: f64 = 1e-6;

// ---------------------------------------------------------------- 1

/// Index sets and node intervals against greedy oracles for `t <= 4096`:
/// exact equality, partition of `[1, t]`, `|I_t| <= log2(2t)`, `max I_t = t`.
pub fn check_index_sets(level: Level) -> CheckResult {
    let limit = match level {
        Level::Fast => 1024,
        Level::Full => 4096,
    };
    timed(1, "index-set oracle", || {
        let mut bad = Vec::new();
        for t in 1..=limit {
            let set = index_set(t)?.members;
            if set != brute_index_set(t) {
                bad.push(format!("I_{t}"));
            }
            if set.len() as f64 > (2.0 * t as f64).log2() || set.last() != Some(&t) {
                bad.push(format!("|I_{t}|"));
            }
            let (lo, hi) = brute_node_interval(t);
            if node_interval(t) != (lo..=hi) {
                bad.push(format!("S_{t}"));
            }
            let mut covered = vec![0u8; t + 1];
            for &i in &set {
                for j in node_interval(i) {
                    covered[j] += 1;
                }
            }
            if covered[1..].iter().any(|&c| c != 1) || covered[0] != 0 {
                bad.push(format!("partition at t={t}"));
            }
        }
        Ok((
            bad.is_empty(),
            format!("t <= {limit}: {} mismatches{}", bad.len(), bad.first().map_or(String::new(), |b| format!(" (first {b})"))),
        ))
    })
}

// ---------------------------------------------------------------- 2

pub const RENYI_ALPHAS: [f64; 4] = [1.5, 2.0, 4.0, 16.0];
pub const RENYI_SHIFTS: [f64; 4] = [0.0, 0.5, 1.0, 3.0];
pub const RENYI_SIGMAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const RENYI_TOL: f64 = 1e-6;

/// Gaussian Renyi divergence closed form against 1-D quadrature.
pub fn check_renyi_divergence(_level: Level) -> CheckResult {
    timed(2, "renyi divergence", || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for &alpha in &RENYI_ALPHAS {
            for &shift in &RENYI_SHIFTS {
                for &sigma in &RENYI_SIGMAS {
                    let closed = gaussian_renyi_divergence(&[0.0], &[shift], sigma, alpha)?;
                    let quad = renyi_quadrature_1d(shift, sigma, alpha);
                    worst = worst.max((closed - quad).abs());
                    n += 1;
                }
            }
        }
        Ok((worst <= RENYI_TOL, format!("{n} grid points, max |diff| = {worst:.3e} (tol {RENYI_TOL:.0e})")))
    })
}

// ---------------------------------------------------------------- 3

pub const RDP_RHOS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
pub const RDP_DELTAS: [f64; 3] = [1e-3, 1e-5, 1e-8];
pub const RDP_REL_TOL: f64 = 0.01;

/// Grid-optimized epsilon against `2 rho sqrt(ln(1/delta))`, and the
/// `rho = 1, delta = 1/e` anchor in `[2.000, 2.001]`.
pub fn check_rdp_conversion(_level: Level) -> CheckResult {
    timed(3, "rdp to dp conversion", || {
        let mut misses = Vec::new();
        let mut worst: f64 = 0.0;
        for &rho in &RDP_RHOS {
            for &delta in &RDP_DELTAS {
                let eps = budget_over_grid(&PrivacyBudget::new(rho, delta)?)?;
                let closed = closed_form_epsilon(rho, delta);
                let rel = (eps - closed).abs() / closed;
                worst = worst.max(rel);
                if rel > RDP_REL_TOL {
                    misses.push(format!("(rho={rho}, delta={delta:e}): {eps:.4} vs {closed:.4}"));
                }
            }
        }
        let anchor = budget_over_grid(&PrivacyBudget::new(1.0, (-1f64).exp())?)?;
        let anchor_ok = (2.000..=2.001).contains(&anchor);
        Ok((
            misses.is_empty() && anchor_ok,
            format!(
                "{}/12 grid points within {:.0}% (worst rel {:.3}); anchor eps = {anchor:.6} {}{}",
                12 - misses.len(),
                RDP_REL_TOL * 100.0,
                worst,
                if anchor_ok { "ok" } else { "out of range" },
                misses.first().map_or(String::new(), |m| format!("; first miss {m}"))
            ),
        ))
    })
}

// ---------------------------------------------------------------- 4

/// `sigma_t^2` equals `Delta_t^2 log2(2T) / rho^2` bit for bit; the
/// expanded formula agrees to a few ulps.
pub fn check_calibration(level: Level) -> CheckResult {
    let limit = match level {
        Level::Fast => 2_000,
        Level::Full => 10_000,
    };
    timed(4, "calibration identity", || {
        let params = [(1.0, 1.0, 0.0, 0.0), (0.5, 2.5, 1.0, 0.7), (3.0, 0.3, 4.0, 2.0)];
        let mut exact_miss = 0usize;
        let mut worst_rel: f64 = 0.0;
        let mut n = 0;
        for k in 1..=3u32 {
            for &(rho, g, h, disp) in &params {
                for t in 1..=limit {
                    let s2 = sigma_sq_schedule(t, k, rho, g, h, disp, limit)?;
                    let d = delta_sensitivity(t, k, g, h, disp);
                    let route = d * d * (2.0 * limit as f64).log2() / (rho * rho);
                    if s2.to_bits() != route.to_bits() {
                        exact_miss += 1;
                    }
                    let lit = literal_sigma_sq(t, k, rho, g, h, disp, limit);
                    worst_rel = worst_rel.max((s2 - lit).abs() / lit);
                    n += 1;
                }
            }
        }
        let ok = exact_miss == 0 && worst_rel <= 16.0 * f64::EPSILON;
        Ok((ok, format!("{n} evaluations: {exact_miss} inexact, expanded-form max rel diff {worst_rel:.2e}")))
    })
}

// ---------------------------------------------------------------- 5

pub const PROBE_ALPHAS: [f64; 3] = [1.5, 2.0, 8.0];

/// Neighboring-dataset probe on coupled runs.
pub fn check_sensitivity_probe(level: Level) -> CheckResult {
    let (horizon, triples) = match level {
        Level::Fast => (128, 4),
        Level::Full => (256, 10),
    };
    timed(5, "sensitivity probe", || {
        let instance = ProblemInstance::quadratic(10, 2.0, 1.0, 0.5, 11)?;
        let mut failures = Vec::new();
        let mut worst_ratio: f64 = 0.0;
        let mut worst_budget: f64 = 0.0;
        let mut pick = Rng::new(0x5EED);
        for i in 0..triples {
            use rand::Rng as _;
            let k = 1 + (i % 3) as u32;
            let (variant, learner) = match i % 4 {
                0 | 2 => (VariantConfig::plain(k), LearnerKind::Osd),
                1 => (VariantConfig::optimistic(k), LearnerKind::OptimisticOmd),
                _ => (VariantConfig::strongly_convex(k, 1.0), LearnerKind::ScOsd),
            };
            let cfg = RunConfig::new(variant, 1.0);
            let q = pick.random_range(1..=horizon);
            let seed = pick.random::<u64>();
            let rng = Rng::new(seed);
            let data = instance.sample_dataset(horizon, &mut rng.split(DATA_STREAM));
            let replacement = instance.sample(&mut pick);
            let alpha = PROBE_ALPHAS[i % PROBE_ALPHAS.len()];
            let r = sensitivity_probe(&instance, learner, &cfg, &data, q, replacement, &rng, alpha)?;
            worst_ratio = worst_ratio.max(r.max_sensitivity_ratio);
            worst_budget = worst_budget.max(r.renyi_sum / r.renyi_budget);
            if !r.passed() {
                failures.push(format!("q={q}: {r:?}"));
            }
        }
        Ok((
            failures.is_empty(),
            format!(
                "T={horizon}, {triples} triples: {} failures, max ||dF||/Delta = {worst_ratio:.3}, max renyi/budget = {worst_budget:.3}",
                failures.len()
            ),
        ))
    })
}

// ---------------------------------------------------------------- 6

/// `E||sum X_t||^2 <= (2/lambda) sum E||X_t||^2` for martingale
/// differences whose direction and scale depend on the past.
pub fn check_martingale_bound(level: Level) -> CheckResult {
    let trials = match level {
        Level::Fast => 1000,
        Level::Full => 1000,
    };
    timed(6, "martingale bound", || {
        use rand::Rng as _;
        use rand_distr::{Distribution, StandardNormal};
        let dim = 5;
        let steps = 40;
        let lambda = NormSpec::l2().lambda;
        // X_t = a_t (s_t e_t) + b_t n_t: s_t a Rademacher sign, e_t the unit
        // vector of the running sum (first axis at zero), n_t standard
        // normal; E||X_t||^2 = a_t^2 + b_t^2 d exactly.
        let a = |t: usize| 1.0 + 0.5 * (t % 3) as f64;
        let b = |t: usize| 0.2 + 0.1 * (t % 4) as f64;
        let second_moments: f64 = (1..=steps).map(|t| a(t).powi(2) + b(t).powi(2) * dim as f64).sum();
        let mut acc = 0.0;
        for trial in 0..trials {
            let mut rng = Rng::new(0xA11CE + trial as u64);
            let mut s = vec![0.0; dim];
            for t in 1..=steps {
                let n = norm2_sq(&s).sqrt();
                let mut e = vec![0.0; dim];
                if n > 0.0 {
                    e.iter_mut().zip(&s).for_each(|(ei, si)| *ei = si / n);
                } else {
                    e[0] = 1.0;
                }
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let mut x: Vec<f64> = e.iter().map(|v| sign * a(t) * v).collect();
                for xi in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *xi += b(t) * z;
                }
                axpy(1.0, &x, &mut s);
            }
            acc += norm2_sq(&s);
        }
        let emp = acc / trials as f64;
        let bound = 2.0 / lambda * second_moments;
        let ok = emp <= bound * mc_slack(trials);
        Ok((ok, format!("{trials} trials: E||S||^2 = {emp:.3}, bound {bound:.3} x {:.4}", mc_slack(trials))))
    })
}

// ---------------------------------------------------------------- 7

/// `E||beta_t grad L(x_t) - g_t||^2 <= 4(k+1)^2 (sigma_G^2 + D^2 sigma_H^2) t^{2k-1} / lambda`.
pub fn check_variance_bound(level: Level) -> CheckResult {
    let seeds = match level {
        Level::Fast => 100,
        Level::Full => 500,
    };
    timed(7, "variance bound", || {
        let horizon = 512;
        let spec = InstanceSpec::quadratic(10, 2.0, 1.0, 0.5, 21);
        let instance = spec.build()?;
        let c = instance.constants();
        let lambda = NormSpec::l2().lambda;
        let mut lines = Vec::new();
        let mut ok = true;
        for k in [1u32, 3] {
            let cfg = ExperimentConfig {
                instance: spec.clone(),
                variant: VariantConfig::plain(k),
                learner: LearnerKind::Osd,
                privacy: PrivacySpec::default(),
                horizons: vec![horizon],
                seeds,
                master_seed: 70 + k as u64,
                output: None,
                trace: false,
                record_wall_time: false,
                disp_mode: crate::conversion::DispMode::Adaptive,
                arms: Vec::new(),
            };
            let res = run_suite(&cfg)?;
            let diags: Vec<&Diagnostics> = res.diagnostics().collect();
            for t in [horizon / 4, horizon / 2, horizon] {
                let emp = mean(&diags.iter().map(|d| d.residual_sq[t - 1]).collect::<Vec<_>>());
                let kk = k as f64 + 1.0;
                let bound = 4.0 * kk * kk * (c.sigma_g.powi(2) + c.diameter.powi(2) * c.sigma_h.powi(2))
                    * (t as f64).powi(2 * k as i32 - 1)
                    / lambda;
                let pass = emp <= bound * mc_slack(diags.len());
                ok &= pass && diags.len() == seeds;
                lines.push(format!("k={k} t={t}: {:.3}", emp / bound));
            }
        }
        Ok((ok, format!("{seeds} seeds, empirical/bound: {}", lines.join(", "))))
    })
}

// ---------------------------------------------------------------- 8..11

struct Scale {
    seeds: usize,
    horizons: Vec<usize>,
}

fn scale(level: Level, max_exp: u32) -> Scale {
    match level {
        Level::Fast => Scale {
            seeds: 6,
            horizons: (8..=11.min(max_exp)).map(|e| 1usize << e).collect(),
        },
        Level::Full => Scale {
            seeds: 20,
            horizons: (8..=max_exp).map(|e| 1usize << e).collect(),
        },
    }
}

fn experiment(spec: InstanceSpec, variant: VariantConfig, learner: LearnerKind, rho: Option<f64>, s: &Scale, master: u64) -> ExperimentConfig {
    ExperimentConfig {
        instance: spec,
        variant,
        learner,
        privacy: PrivacySpec {
            rho,
            ..PrivacySpec::default()
        },
        horizons: s.horizons.clone(),
        seeds: s.seeds,
        master_seed: master,
        output: None,
        trace: false,
        record_wall_time: false,
        disp_mode: crate::conversion::DispMode::Adaptive,
        arms: Vec::new(),
    }
}

fn bound_inputs(instance: &ProblemInstance, cfg: &ExperimentConfig, horizon: usize) -> Result<BoundInputs> {
    let rc = cfg.run_config();
    Ok(BoundInputs {
        k: cfg.variant.k,
        lambda: NormSpec::l2().lambda,
        constants: instance.constants(),
        noise_variance: NoiseDistribution::new(rc.noise, instance.dim())?.rdp_variance(),
        rho: rc.rho,
        optimum_norm: crate::geometry::vector::dist2(instance.optimum(), &instance.domain().center),
        pf: pf_constants_for(instance, &rc, horizon)?,
    })
}

/// Mean gap at every horizon against the closed-form bound evaluated with
/// the mean measured regret.
fn bound_respected(res: &RunResult, cfg: &ExperimentConfig) -> Result<(bool, f64)> {
    let instance = cfg.instance.build()?;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for row in &res.aggregate.per_horizon {
        let inputs = bound_inputs(&instance, cfg, row.horizon)?;
        let bound = theoretical_gap_bound(cfg.variant.mode, &inputs, row.horizon, row.mean_regret)?;
        worst = worst.max(row.mean_gap / bound);
        ok &= row.mean_gap <= bound;
    }
    Ok((ok, worst))
}

fn slope_of(res: &RunResult) -> Result<f64> {
    let ts: Vec<f64> = res.aggregate.per_horizon.iter().map(|r| r.horizon as f64).collect();
    let gs: Vec<f64> = res.aggregate.per_horizon.iter().map(|r| r.mean_gap).collect();
    Ok(fit_rate(&ts, &gs)?.slope)
}

fn failures_of(res: &RunResult) -> usize {
    res.aggregate.failures.len()
}

pub const PLAIN_SLOPE: (f64, f64) = (-1.2, -0.35);
pub const SC_SLOPE: (f64, f64) = (-1.3, -0.7);
pub const OPTIMISTIC_SLOPE_MAX: f64 = -1.2;
pub const PF_CLIP_RATE_MAX: f64 = 0.01;

fn rate_instance() -> InstanceSpec {
    InstanceSpec::quadratic(10, 2.0, 1.0, 0.5, 7)
}

fn plain_rate(level: Level, diags: &mut Vec<Diagnostics>) -> CheckResult {
    timed(8, "plain convergence rate", || {
        let s = scale(level, 13);
        let base = experiment(rate_instance(), VariantConfig::plain(1), LearnerKind::Osd, None, &s, 8);
        let res = run_suite(&base)?;
        let slope = slope_of(&res)?;
        let private_cfg = ExperimentConfig {
            privacy: PrivacySpec {
                rho: Some(1.0),
                ..PrivacySpec::default()
            },
            ..base.clone()
        };
        let private = run_suite(&private_cfg)?;
        let (bound_ok, worst) = bound_respected(&private, &private_cfg)?;
        diags.extend(res.diagnostics().cloned());
        diags.extend(private.diagnostics().cloned());
        let fails = failures_of(&res) + failures_of(&private);
        let slope_ok = (PLAIN_SLOPE.0..=PLAIN_SLOPE.1).contains(&slope);
        Ok((
            slope_ok && bound_ok && fails == 0,
            format!("slope {slope:.3} in {PLAIN_SLOPE:?}: {slope_ok}; rho=1 max gap/bound {worst:.3e}; {fails} failed runs"),
        ))
    })
}

fn sc_rate(level: Level, diags: &mut Vec<Diagnostics>) -> CheckResult {
    timed(9, "strongly convex rate", || {
        let s = scale(level, 13);
        let base = experiment(rate_instance(), VariantConfig::strongly_convex(1, 1.0), LearnerKind::ScOsd, None, &s, 9);
        let res = run_suite(&base)?;
        let slope = slope_of(&res)?;
        let private_cfg = ExperimentConfig {
            privacy: PrivacySpec {
                rho: Some(1.0),
                ..PrivacySpec::default()
            },
            ..base.clone()
        };
        let private = run_suite(&private_cfg)?;
        let (bound_ok, worst) = bound_respected(&private, &private_cfg)?;
        let sc_ok = res
            .diagnostics()
            .chain(private.diagnostics())
            .all(|d| d.sc_decomposition_holds(DECOMPOSITION_REL_TOL) == Some(true));
        diags.extend(res.diagnostics().cloned());
        diags.extend(private.diagnostics().cloned());
        let fails = failures_of(&res) + failures_of(&private);
        let slope_ok = (SC_SLOPE.0..=SC_SLOPE.1).contains(&slope);
        Ok((
            slope_ok && bound_ok && sc_ok && fails == 0,
            format!(
                "slope {slope:.3} in {SC_SLOPE:?}: {slope_ok}; rho=1 max gap/bound {worst:.3e}; regularized decomposition {sc_ok}; {fails} failed runs"
            ),
        ))
    })
}

fn optimistic(level: Level, diags: &mut Vec<Diagnostics>) -> CheckResult {
    timed(10, "optimistic adaptivity", || {
        let s = scale(level, 12);
        let mut spec = rate_instance();
        spec.sigma_g = 0.0;
        let mut cfg = experiment(spec, VariantConfig::optimistic(1), LearnerKind::OptimisticOmd, None, &s, 10);
        cfg.arms = vec![
            ArmSpec {
                label: "optimistic".into(),
                variant: None,
                learner: None,
                instance: None,
            },
            ArmSpec {
                label: "plain".into(),
                variant: Some(VariantConfig::plain(1)),
                learner: Some(LearnerKind::Osd),
                instance: None,
            },
        ];
        let cmp = compare_variants(&cfg)?;
        for r in &cmp.results {
            diags.extend(r.diagnostics().cloned());
        }
        let opt = cmp.table.arm("optimistic").expect("arm exists");
        let plain = cmp.table.arm("plain").expect("arm exists");
        let slope = opt.regret_ratio_rate.map(|r| r.slope);
        let slope_ok = slope.is_some_and(|s| s <= OPTIMISTIC_SLOPE_MAX);
        let t_max = *s.horizons.last().expect("non-empty");
        let (go, gp) = match (opt.at(t_max), plain.at(t_max)) {
            (Some(a), Some(b)) => (a.median_gap, b.median_gap),
            _ => return Ok((false, format!("no successful runs at T={t_max}"))),
        };
        let fails = opt.failures + plain.failures;
        Ok((
            slope_ok && go <= gp && fails == 0,
            format!(
                "regret/beta slope {} (<= {OPTIMISTIC_SLOPE_MAX}); median gap at T={t_max}: optimistic {go:.3e} vs plain {gp:.3e}; {fails} failed runs",
                slope.map_or("n/a".to_string(), |s| format!("{s:.3}"))
            ),
        ))
    })
}

fn parameter_free(level: Level, diags: &mut Vec<Diagnostics>) -> CheckResult {
    timed(11, "parameter-free sensitivity", || {
        let s = scale(level, 12);
        let mut near = rate_instance();
        near.optimum_distance = Some(0.05 * near.diameter);
        let mut far = near.clone();
        far.optimum_distance = Some(0.45 * far.diameter);
        let mut cfg = experiment(near.clone(), VariantConfig::parameter_free(0.1, 1.0), LearnerKind::ParameterFree, None, &s, 11);
        cfg.arms = vec![
            ArmSpec {
                label: "near".into(),
                variant: None,
                learner: None,
                instance: Some(near),
            },
            ArmSpec {
                label: "far".into(),
                variant: None,
                learner: None,
                instance: Some(far),
            },
        ];
        let cmp = compare_variants(&cfg)?;
        for r in &cmp.results {
            diags.extend(r.diagnostics().cloned());
        }
        let near = cmp.table.arm("near").expect("arm exists");
        let far = cmp.table.arm("far").expect("arm exists");
        let mut ordered = true;
        let mut ratios = Vec::new();
        for h in &near.per_horizon {
            let Some(f) = far.at(h.horizon) else {
                ordered = false;
                continue;
            };
            ordered &= h.median_gap <= f.median_gap;
            ratios.push(format!("{:.2e}", h.median_gap / f.median_gap));
        }
        let clip = near
            .per_horizon
            .iter()
            .chain(&far.per_horizon)
            .map(|h| h.clip_rate)
            .fold(0.0, f64::max);
        let fails = near.failures + far.failures;
        Ok((
            ordered && clip < PF_CLIP_RATE_MAX && fails == 0,
            format!(
                "median gap near/far per T: [{}]; max clip rate {clip:.4} (< {PF_CLIP_RATE_MAX}); {fails} failed runs",
                ratios.join(", ")
            ),
        ))
    })
}

fn decomposition(diags: &[Diagnostics]) -> CheckResult {
    timed(12, "decomposition", || {
        let bad = diags.iter().filter(|d| !d.decomposition_holds(DECOMPOSITION_REL_TOL)).count();
        let worst = diags
            .iter()
            .map(|d| (d.weighted_gap - d.decomposition_rhs) / d.decomposition_rhs.abs().max(d.weighted_gap.abs()).max(1e-300))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((
            bad == 0 && !diags.is_empty(),
            format!("{} runs: {bad} violations, max (lhs - rhs)/scale = {worst:.3e}", diags.len()),
        ))
    })
}

/// Runs criteria 8 to 12; the decomposition check covers every run of 8-11.
pub fn check_rates(level: Level) -> Vec<CheckResult> {
    let mut diags = Vec::new();
    let mut out = vec![
        plain_rate(level, &mut diags),
        sc_rate(level, &mut diags),
        optimistic(level, &mut diags),
        parameter_free(level, &mut diags),
    ];
    out.push(decomposition(&diags));
    out
}

pub fn check_plain_rate(level: Level) -> CheckResult {
    plain_rate(level, &mut Vec::new())
}

pub fn check_strongly_convex_rate(level: Level) -> CheckResult {
    sc_rate(level, &mut Vec::new())
}

pub fn check_optimistic(level: Level) -> CheckResult {
    optimistic(level, &mut Vec::new())
}

pub fn check_parameter_free(level: Level) -> CheckResult {
    parameter_free(level, &mut Vec::new())
}

pub fn check_decomposition(level: Level) -> CheckResult {
    check_rates(level).pop().expect("five results")
}

// ---------------------------------------------------------------- 13

/// Two `run` invocations of one config write byte-identical `raw.csv`.
pub fn check_determinism(_level: Level) -> CheckResult {
    timed(13, "determinism", || {
        let base = std::env::temp_dir().join(format!("dpotb-determinism-{}-{}", std::process::id(), run_seed(0, 0, 0)));
        let s = Scale {
            seeds: 3,
            horizons: vec![64, 128, 256, 512],
        };
        let mut cfg = experiment(InstanceSpec::quadratic(5, 2.0, 1.0, 0.5, 3), VariantConfig::plain(2), LearnerKind::Osd, Some(1.0), &s, 13);
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let dir = base.join(format!("rep{rep}"));
            cfg.output = Some(dir.clone());
            run_suite(&cfg)?;
            let path = dir.join("raw.csv");
            bytes.push(std::fs::read(&path).map_err(|e| crate::error::Error::io(&path, e))?);
        }
        let _ = std::fs::remove_dir_all(&base);
        let same = bytes[0] == bytes[1] && !bytes[0].is_empty();
        Ok((same, format!("raw.csv {} bytes, identical: {same}", bytes[0].len())))
    })
}

/// Every acceptance check at `level`, in criterion order.
pub fn verify_all(level: Level) -> VerifyReport {
    let mut checks = vec![
        check_index_sets(level),
        check_renyi_divergence(level),
        check_rdp_conversion(level),
        check_calibration(level),
        check_sensitivity_probe(level),
        check_martingale_bound(level),
        check_variance_bound(level),
    ];
    checks.extend(check_rates(level));
    checks.push(check_determinism(level));
    VerifyReport { level, checks }
}

