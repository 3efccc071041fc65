use std::fmt;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::suite::{fit_rate, mean, median, run_suite, RateFit, RunResult};
use crate::conversion::WeightSchedule;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ArmHorizon {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub median_gap: f64,
    pub mean_gap: f64,
    /// Median over seeds of `Regret_T(x*) / beta_{1:T}`.
    pub median_regret_ratio: f64,
    pub clip_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmSummary {
    pub label: String,
    pub variant: String,
    pub learner: String,
    pub per_horizon: Vec<ArmHorizon>,
    pub gap_rate: Option<RateFit>,
    pub regret_ratio_rate: Option<RateFit>,
    pub failures: usize,
}

impl ArmSummary {
    pub fn at(&self, horizon: usize) -> Option<&ArmHorizon> {
        self.per_horizon.iter().find(|h| h.horizon == horizon)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareTable {
    pub arms: Vec<ArmSummary>,
}

impl CompareTable {
    pub fn arm(&self, label: &str) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.label == label)
    }
}

impl fmt::Display for CompareTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:>8} {:>14} {:>14} {:>14} {:>10}", "arm", "T", "median_gap", "mean_gap", "regret/beta", "clip_rate")?;
        for arm in &self.arms {
            for h in &arm.per_horizon {
                writeln!(
                    f,
                    "{:<20} {:>8} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.4}",
                    arm.label, h.horizon, h.median_gap, h.mean_gap, h.median_regret_ratio, h.clip_rate
                )?;
            }
            let slope = |r: &Option<RateFit>| r.map_or_else(|| "n/a".to_string(), |r| format!("{:.3} ± {:.3}", r.slope, r.stderr));
            writeln!(
                f,
                "{:<20} gap slope {}, regret/beta slope {}",
                arm.label,
                slope(&arm.gap_rate),
                slope(&arm.regret_ratio_rate)
            )?;
        }
        Ok(())
    }
}

pub struct Comparison {
    pub table: CompareTable,
    pub results: Vec<RunResult>,
}

/// Runs every arm on matched seeds and tabulates gap and regret statistics.
pub fn compare_variants(config: &ExperimentConfig) -> Result<Comparison> {
    config.validate()?;
    if config.arms.len() < 2 {
        return Err(Error::Config {
            field: "arms".into(),
            reason: format!("comparison needs at least two arms, got {}", config.arms.len()),
        });
    }
    let mut arms = Vec::new();
    let mut results = Vec::new();
    for (i, spec) in config.arms.iter().enumerate() {
        let arm_cfg = config.arm(i);
        let res = run_suite(&arm_cfg)?;
        arms.push(summarize(&spec.label, &arm_cfg, &res));
        results.push(res);
    }
    Ok(Comparison {
        table: CompareTable { arms },
        results,
    })
}

fn summarize(label: &str, cfg: &ExperimentConfig, res: &RunResult) -> ArmSummary {
    let schedule = WeightSchedule::new(cfg.variant.k);
    let mut horizons = cfg.horizons.clone();
    horizons.sort_unstable();
    let per_horizon: Vec<ArmHorizon> = horizons
        .iter()
        .filter_map(|&t| {
            let rows: Vec<_> = res.rows_for(t).collect();
            if rows.is_empty() {
                return None;
            }
            let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
            let ratios: Vec<f64> = rows.iter().map(|r| r.regret / schedule.prefix(t)).collect();
            let clips: usize = rows.iter().map(|r| r.clips).sum();
            Some(ArmHorizon {
                horizon: t,
                median_gap: median(&gaps),
                mean_gap: mean(&gaps),
                median_regret_ratio: median(&ratios),
                clip_rate: clips as f64 / (rows.len() * t) as f64,
            })
        })
        .collect();
    let ts: Vec<f64> = per_horizon.iter().map(|h| h.horizon as f64).collect();
    let gaps: Vec<f64> = per_horizon.iter().map(|h| h.median_gap).collect();
    let ratios: Vec<f64> = per_horizon.iter().map(|h| h.median_regret_ratio).collect();
    ArmSummary {
        label: label.to_string(),
        variant: cfg.variant.mode.as_str().to_string(),
        learner: cfg.learner.as_str().to_string(),
        gap_rate: fit_rate(&ts, &gaps).ok(),
        regret_ratio_rate: fit_rate(&ts, &ratios).ok(),
        per_horizon,
        failures: res.aggregate.failures.len(),
    }
}
