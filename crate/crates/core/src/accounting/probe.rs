use serde::Serialize;

use crate::conversion::{gradient_difference, run, RunConfig, RunOutput, WeightSchedule};
use crate::error::{Error, Result};
use crate::geometry::gaussian_renyi_divergence;
use crate::geometry::vector::{axpy, dist2};
use crate::geometry::Rng;
use crate::learners::LearnerKind;
use crate::problems::{Dataset, Datum, ProblemInstance};
use crate::tree_noise::{in_set, node_interval};

/// Outcome of one neighboring-dataset probe.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub q: usize,
    pub horizon: usize,
    /// Traces of the two runs agree bit for bit before round `q`.
    pub prefix_identical: bool,
    /// Nodes with `q` outside their interval whose replayed sums differ.
    pub outside_mismatches: usize,
    /// Nodes with `q` inside their interval exceeding their sensitivity.
    pub inside_violations: usize,
    /// Largest `||F_i(Z) - F_i(Z')|| / Delta_i` over nodes containing `q`.
    pub max_sensitivity_ratio: f64,
    /// Accumulated Renyi divergence over `IN(q)`.
    pub renyi_sum: f64,
    /// `alpha rho^2 / 2`
    pub renyi_budget: f64,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.prefix_identical
            && self.outside_mismatches == 0
            && self.inside_violations == 0
            && self.renyi_sum <= self.renyi_budget
    }
}

fn node_sum(deltas: &[Vec<f64>], i: usize) -> Vec<f64> {
    let mut s = vec![0.0; deltas[0].len()];
    for j in node_interval(i) {
        axpy(1.0, &deltas[j - 1], &mut s);
    }
    s
}

/// Runs the conversion on `data` and on its neighbor differing at round
/// `q`, with identical randomness, and checks the per-node premise of the
/// privacy argument.
///
/// Node sums `F_i` are compared along the first run's trajectory: the
/// neighbor's gradient differences are recomputed at the first run's
/// iterates. Nodes whose interval excludes `q` must agree exactly; the
/// others must move by at most the recorded sensitivity `Delta_i`.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_probe(
    instance: &ProblemInstance,
    learner: LearnerKind,
    cfg: &RunConfig,
    data: &Dataset,
    q: usize,
    replacement: Datum,
    rng: &Rng,
    alpha: f64,
) -> Result<ProbeReport> {
    if !cfg.rho.is_finite() {
        return Err(Error::invalid("rho", "the probe needs a finite privacy level"));
    }
    let horizon = data.len();
    if q == 0 || q > horizon {
        return Err(Error::invalid("q", format!("must lie in [1, {horizon}]")));
    }
    let cfg = RunConfig {
        record_trace: true,
        ..*cfg
    };
    let neighbor = data.neighbor(q, replacement);
    let exec = |d: &Dataset| -> Result<RunOutput> {
        let cap = crate::conversion::learner_cap(instance, &cfg, horizon)?;
        let mut l = learner.build(instance.domain(), cap)?;
        run(instance, l.as_mut(), d, &cfg, rng)
    };
    let a = exec(data)?;
    let b = exec(&neighbor)?;

    let prefix_identical = a.trace[..q - 1]
        .iter()
        .zip(&b.trace[..q - 1])
        .all(|(ra, rb)| ra.w == rb.w && ra.x == rb.x && ra.delta == rb.delta);

    let schedule = WeightSchedule::new(cfg.variant.k);
    let deltas_a: Vec<Vec<f64>> = a.trace.iter().map(|r| r.delta.clone()).collect();
    let origin = vec![0.0; instance.dim()];
    let deltas_replay: Vec<Vec<f64>> = (1..=horizon)
        .map(|t| {
            let x_prev = if t == 1 { &origin } else { &a.trace[t - 2].x };
            let z = neighbor.get(t).expect("t <= T");
            gradient_difference(instance, &a.trace[t - 1].x, x_prev, z, schedule.beta(t), schedule.beta(t - 1))
        })
        .collect();

    let mut outside_mismatches = 0;
    let mut inside_violations = 0;
    let mut max_ratio: f64 = 0.0;
    let mut renyi_sum = 0.0;
    let members = in_set(q, horizon);
    for i in 1..=horizon {
        let fa = node_sum(&deltas_a, i);
        let fb = node_sum(&deltas_replay, i);
        if node_interval(i).contains(&q) {
            let entry = a.sensitivity.get(i).expect("every node is recorded");
            let gap = dist2(&fa, &fb);
            max_ratio = max_ratio.max(gap / entry.delta);
            if gap > entry.delta {
                inside_violations += 1;
            }
            debug_assert!(members.contains(&i));
            renyi_sum += gaussian_renyi_divergence(&fa, &fb, entry.sigma_sq.sqrt(), alpha)?;
        } else if fa != fb {
            outside_mismatches += 1;
        }
    }

    Ok(ProbeReport {
        q,
        horizon,
        prefix_identical,
        outside_mismatches,
        inside_violations,
        max_sensitivity_ratio: max_ratio,
        renyi_sum,
        renyi_budget: alpha * cfg.rho * cfg.rho / 2.0,
    })
}
