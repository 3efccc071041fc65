use serde::{Deserialize, Serialize};

use super::schedule::{delta_bound, gradient_difference, step_average, WeightSchedule};
use super::variant::{clip_to, loss_gradient_pf, loss_gradient_plain, loss_gradient_sc, pf_constants, PfConstants, VariantConfig, VariantMode};
use crate::accounting::{delta_sensitivity, SensitivityLedger};
use crate::error::{Error, Result};
use crate::geometry::vector::{axpy, dist2, dot, norm2, norm2_sq};
use crate::geometry::{NoiseDistribution, NoiseKind, Rng};
use crate::learners::{Feedback, OnlineLearner, RegretLedger, Regularizer};
use crate::problems::{Dataset, ProblemInstance};
use crate::tree_noise::{index_set, sigma_sq_schedule, NoiseTree};

/// Stream label of the noise tree inside a run's RNG.
pub const NOISE_STREAM: u64 = 0x006e_6f69_7365;

/// How the displacement entering the noise scale is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispMode {
    /// Running max of `||w_i - x_{i-1}||` over the realized trajectory.
    Adaptive,
    /// The diameter `D`, valid for every trajectory.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub variant: VariantConfig,
    /// Privacy level; `f64::INFINITY` disables noise.
    pub rho: f64,
    pub noise: NoiseKind,
    pub disp_mode: DispMode,
    /// Track population-gradient diagnostics each round.
    pub oracle: bool,
    /// Keep a per-round trace.
    pub record_trace: bool,
    /// Check the averaging and sensitivity invariants each round.
    pub check_invariants: bool,
}

impl RunConfig {
    pub fn new(variant: VariantConfig, rho: f64) -> Self {
        RunConfig {
            variant,
            rho,
            noise: NoiseKind::GaussianRdp,
            disp_mode: DispMode::Adaptive,
            oracle: true,
            record_trace: false,
            check_invariants: true,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.variant.validate()?;
        crate::tree_noise::validate_rho(self.rho)
    }
}

/// Parameter-free constants for `instance` under `cfg`, if that variant is
/// selected.
pub fn pf_constants_for(instance: &ProblemInstance, cfg: &RunConfig, horizon: usize) -> Result<Option<PfConstants>> {
    if cfg.variant.mode != VariantMode::ParameterFree {
        return Ok(None);
    }
    let c = instance.constants();
    let sigma_d = if cfg.rho.is_infinite() {
        1.0
    } else {
        NoiseDistribution::new(cfg.noise, instance.dim())?
            .sub_gaussian_sigma()
            .ok_or_else(|| Error::invalid("noise", "parameter-free variant needs sub-Gaussian noise"))?
    };
    pf_constants(
        c.lipschitz,
        c.smoothness,
        c.diameter,
        instance.dim(),
        horizon,
        cfg.variant.delta_prob,
        cfg.variant.c,
        sigma_d,
        cfg.rho,
    )
    .map(Some)
}

/// Gradient bound a learner may assume under `cfg`; the final-round cap
/// for the parameter-free variant, infinite otherwise.
pub fn learner_cap(instance: &ProblemInstance, cfg: &RunConfig, horizon: usize) -> Result<f64> {
    Ok(pf_constants_for(instance, cfg, horizon)?.map_or(f64::INFINITY, |pf| pf.cap(horizon)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub index_set: Vec<usize>,
    pub w: Vec<f64>,
    pub x: Vec<f64>,
    pub delta: Vec<f64>,
    pub g_norm: f64,
    pub gamma_norm: f64,
    pub sigma: f64,
    pub delta_norm: f64,
    pub max_disp: f64,
    pub clip: bool,
    pub gap: Option<f64>,
}

/// Population-gradient quantities accumulated over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `L(x_T) - L(x*)`
    pub gap: f64,
    /// `beta_{1:T} (L(x_T) - L(x*))`
    pub weighted_gap: f64,
    /// `Regret_T(x*) + sum_t <beta_t grad L(x_t) - g_bar_t, w_t - x*>`
    pub decomposition_rhs: f64,
    /// `sum_t |<beta_t grad L(x_t), w_t - x*>|`, the magnitude the two sides
    /// are built from.
    pub decomposition_scale: f64,
    /// Regularized regret plus `sum_t 2 ||beta_t grad L(x_t) - g_t - gamma_t||^2 / (beta_t mu)`
    /// (strongly convex variant only).
    pub sc_decomposition_rhs: Option<f64>,
    /// `||beta_t grad L(x_t) - g_t||^2` for `t = 1..T`.
    pub residual_sq: Vec<f64>,
}

impl Diagnostics {
    /// Slack-adjusted check of the general decomposition.
    pub fn decomposition_holds(&self, rel_tol: f64) -> bool {
        self.weighted_gap <= self.decomposition_rhs + self.tolerance(self.decomposition_rhs, rel_tol)
    }

    pub fn sc_decomposition_holds(&self, rel_tol: f64) -> Option<bool> {
        self.sc_decomposition_rhs
            .map(|rhs| self.weighted_gap <= rhs + self.tolerance(rhs, rel_tol))
    }

    fn tolerance(&self, rhs: f64, rel_tol: f64) -> f64 {
        rel_tol * self.weighted_gap.abs().max(rhs.abs()).max(self.decomposition_scale * 1e-6)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub horizon: usize,
    pub x_final: Vec<f64>,
    pub ledger: RegretLedger,
    pub sensitivity: SensitivityLedger,
    pub clips: usize,
    pub max_disp: f64,
    pub max_sigma: f64,
    pub trace: Vec<TraceRow>,
    pub diagnostics: Option<Diagnostics>,
}

impl RunOutput {
    /// Regret of the losses the learner was scored on, against `u`.
    pub fn regret(&self, u: &[f64]) -> f64 {
        self.ledger.loss_regret(u)
    }
}

/// Runs the private online-to-batch conversion over `data` (length `T`).
///
/// Round `t`: play `w_t`, average into `x_t`, add the gradient difference
/// `delta_t` to `g_t`, draw tree noise `gamma_t` at the scale set by the
/// state through round `t`, and send the variant's loss gradient.
pub fn run(
    instance: &ProblemInstance,
    learner: &mut dyn OnlineLearner,
    data: &Dataset,
    cfg: &RunConfig,
    rng: &Rng,
) -> Result<RunOutput> {
    cfg.validate()?;
    let horizon = data.len();
    if horizon == 0 {
        return Err(Error::DatasetExhausted { needed: 1, available: 0 });
    }
    if learner.domain() != instance.domain() {
        return Err(Error::invalid("learner", "learner domain differs from the instance domain"));
    }
    let dim = instance.dim();
    let consts = instance.constants();
    let k = cfg.variant.k;
    let schedule = WeightSchedule::new(k);
    let pf = pf_constants_for(instance, cfg, horizon)?;
    let mu = cfg.variant.mu.unwrap_or(0.0);
    let center = instance.domain().center.clone();
    let optimum = instance.optimum().to_vec();

    let mut tree = NoiseTree::new(NoiseDistribution::new(cfg.noise, dim)?, rng.split(NOISE_STREAM), horizon)?;
    let mut ledger = RegretLedger::new(center.clone());
    let mut sensitivity = SensitivityLedger::new(horizon, k, cfg.rho);

    let mut x_prev = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut weighted_sum = vec![0.0; dim];
    let mut prefix = 0.0;
    let mut beta_prev = 0.0;
    let mut max_disp: f64 = 0.0;
    let mut max_sigma: f64 = 0.0;
    let mut clips = 0;
    let mut trace = Vec::new();

    let mut dec_cross = 0.0;
    let mut dec_scale = 0.0;
    let mut sc_residual = 0.0;
    let mut residual_sq = Vec::new();

    for t in 1..=horizon {
        let w = learner.predict();
        if !instance.domain().contains(&w) {
            return Err(Error::Invariant {
                round: t,
                what: format!("learner `{}` played outside the domain", learner.name()),
            });
        }
        let disp = dist2(&w, &x_prev);
        max_disp = max_disp.max(disp);
        let scale_disp = match cfg.disp_mode {
            DispMode::Adaptive => max_disp,
            DispMode::Static => consts.diameter.max(max_disp),
        };

        let beta = schedule.beta(t);
        let x = step_average(&x_prev, &w, prefix, beta);
        prefix += beta;
        axpy(beta, &w, &mut weighted_sum);

        let z = data.get(t).ok_or(Error::DatasetExhausted {
            needed: t,
            available: data.len(),
        })?;
        let delta = gradient_difference(instance, &x, &x_prev, z, beta, beta_prev);
        let delta_norm = norm2(&delta);

        if cfg.check_invariants {
            check_round(t, k, &consts, &x, &x_prev, disp, max_disp, prefix, beta, &weighted_sum, delta_norm)?;
        }

        axpy(1.0, &delta, &mut g);

        let sigma_sq = sigma_sq_schedule(t, k, cfg.rho, consts.lipschitz, consts.smoothness, scale_disp, horizon)?;
        let sigma = sigma_sq.sqrt();
        max_sigma = max_sigma.max(sigma);
        sensitivity.push(
            t,
            delta_sensitivity(t, k, consts.lipschitz, consts.smoothness, scale_disp),
            sigma_sq,
        );
        let gamma = tree.noise(t, sigma)?;

        let base = loss_gradient_plain(&g, &gamma);
        let (mut sent, reg, mu_t) = match cfg.variant.mode {
            VariantMode::Plain | VariantMode::Optimistic => (base.clone(), Regularizer::None, 0.0),
            VariantMode::StronglyConvex => (
                loss_gradient_sc(&g, &gamma, &w, &x, beta, mu)?,
                Regularizer::Quadratic {
                    weight: beta * mu / 4.0,
                    anchor: x.clone(),
                },
                beta * mu / 2.0,
            ),
            VariantMode::ParameterFree => {
                let pf = pf.as_ref().expect("constants exist for the parameter-free variant");
                let (xi, nu) = (pf.xi(t), pf.nu(t));
                (
                    loss_gradient_pf(&g, &gamma, &w, &center, xi, nu),
                    Regularizer::Radial { xi, nu },
                    0.0,
                )
            }
        };
        let clip = match &pf {
            Some(pf) => clip_to(&mut sent, pf.cap(t)),
            None => false,
        };
        if clip {
            clips += 1;
            log::info!("round {t}: loss gradient clipped to the cap {}", pf.as_ref().map_or(0.0, |p| p.cap(t)));
        }

        if cfg.oracle {
            let mut pop = instance.population_gradient(&x);
            pop.iter_mut().for_each(|v| *v *= beta);
            let w_minus_opt: Vec<f64> = w.iter().zip(&optimum).map(|(a, b)| a - b).collect();
            dec_scale += dot(&pop, &w_minus_opt).abs();
            let diff: Vec<f64> = pop.iter().zip(&sent).map(|(a, b)| a - b).collect();
            dec_cross += dot(&diff, &w_minus_opt);
            let res: Vec<f64> = pop.iter().zip(&g).map(|(a, b)| a - b).collect();
            residual_sq.push(norm2_sq(&res));
            if cfg.variant.mode == VariantMode::StronglyConvex {
                let res_noisy: Vec<f64> = res.iter().zip(&gamma).map(|(a, b)| a - b).collect();
                sc_residual += 2.0 * norm2_sq(&res_noisy) / (beta * mu);
            }
        }

        ledger.record(&w, &sent, &base, reg);

        if cfg.record_trace {
            trace.push(TraceRow {
                t,
                index_set: index_set(t)?.members,
                w: w.clone(),
                x: x.clone(),
                delta,
                g_norm: norm2(&g),
                gamma_norm: norm2(&gamma),
                sigma,
                delta_norm,
                max_disp,
                clip,
                gap: cfg.oracle.then(|| instance.population_gap(&x)),
            });
        }

        let hint = (cfg.variant.mode == VariantMode::Optimistic).then_some(sent.as_slice());
        learner.receive(Feedback {
            gradient: &sent,
            hint_next: hint,
            strong_convexity: mu_t,
        })?;

        x_prev = x;
        beta_prev = beta;
    }

    let diagnostics = cfg.oracle.then(|| {
        let gap = instance.population_gap(&x_prev);
        let weighted_gap = prefix * (instance.population_loss(&x_prev) - instance.population_loss(&optimum));
        let regret_sent = ledger.sent_regret(&optimum);
        Diagnostics {
            gap,
            weighted_gap,
            decomposition_rhs: regret_sent + dec_cross,
            decomposition_scale: dec_scale,
            sc_decomposition_rhs: (cfg.variant.mode == VariantMode::StronglyConvex)
                .then(|| ledger.loss_regret(&optimum) + sc_residual),
            residual_sq,
        }
    });

    Ok(RunOutput {
        horizon,
        x_final: x_prev,
        ledger,
        sensitivity,
        clips,
        max_disp,
        max_sigma,
        trace,
        diagnostics,
    })
}

const REL: f64 = 1e-9;

#[allow(clippy::too_many_arguments)]
fn check_round(
    t: usize,
    k: u32,
    consts: &crate::problems::Constants,
    x: &[f64],
    x_prev: &[f64],
    disp: f64,
    max_disp: f64,
    prefix: f64,
    beta: f64,
    weighted_sum: &[f64],
    delta_norm: f64,
) -> Result<()> {
    let invariant = |what: String| Err(Error::Invariant { round: t, what });

    // stability: ||x_t - x_{t-1}|| beta_{1:t} = beta_t ||w_t - x_{t-1}||
    if t > 1 {
        let lhs = dist2(x, x_prev) * prefix;
        let rhs = beta * disp;
        // The left side subtracts nearby iterates, so its rounding error
        // scales with the iterate norms rather than with the distance.
        let cancellation = 64.0 * f64::EPSILON * prefix * (norm2(x) + norm2(x_prev));
        if (lhs - rhs).abs() > REL * lhs.abs().max(rhs.abs()) + cancellation + 1e-300 {
            return invariant(format!("stability identity: {lhs} vs {rhs}"));
        }
    }

    // weighted-average recomputation at powers of two
    if t.is_power_of_two() {
        let direct: Vec<f64> = weighted_sum.iter().map(|v| v / prefix).collect();
        let err = dist2(&direct, x);
        if err > REL * norm2(x).max(consts.diameter) {
            return invariant(format!("averaged iterate drifted by {err}"));
        }
    }

    let bound = delta_bound(t, k, consts.lipschitz, consts.smoothness, max_disp);
    if delta_norm > bound * (1.0 + 1e-12) {
        return invariant(format!("gradient difference norm {delta_norm} exceeds {bound}"));
    }
    Ok(())
}
