use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::accounting::{budget_over_grid, budget_report, BudgetReport};
use crate::conversion::{learner_cap, run, Diagnostics, RunOutput};
use crate::error::{Error, Result};
use crate::geometry::{derive_seed, Rng};
use crate::problems::ProblemInstance;

/// Stream label for dataset sampling inside a run's RNG.
pub const DATA_STREAM: u64 = 0x6461_7461;

/// Seed of run `(T, seed_index)`; independent of the other horizons listed.
pub fn run_seed(master: u64, horizon: usize, seed_index: usize) -> u64 {
    derive_seed(master, &[horizon as u64, seed_index as u64])
}

/// One row of `raw.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub variant: String,
    pub k: u32,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed: usize,
    pub gap: f64,
    pub regret: f64,
    pub eps: f64,
    pub clips: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub runs: usize,
    pub mean_gap: f64,
    pub median_gap: f64,
    pub mean_regret: f64,
    pub median_regret: f64,
    pub total_clips: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed: usize,
    pub error: String,
}

/// Contents of `aggregate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub variant: String,
    pub learner: String,
    pub k: u32,
    pub budget: BudgetReport,
    pub per_horizon: Vec<AggregateRow>,
    /// Log-log fit of mean gap against `T`, when at least four horizons
    /// have positive mean gaps.
    pub gap_rate: Option<RateFit>,
    pub failures: Vec<RunFailure>,
}

/// Per-run data kept in memory for checks; not serialized.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub horizon: usize,
    pub seed: usize,
    pub output: RunOutput,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub rows: Vec<RawRow>,
    pub aggregate: Aggregate,
    pub records: Vec<RunRecord>,
}

impl RunResult {
    pub fn diagnostics(&self) -> impl Iterator<Item = &Diagnostics> {
        self.records.iter().filter_map(|r| r.output.diagnostics.as_ref())
    }

    pub fn rows_for(&self, horizon: usize) -> impl Iterator<Item = &RawRow> {
        self.rows.iter().filter(move |r| r.horizon == horizon)
    }
}

/// Ordinary least squares of `ln gap` on `ln T`. Non-positive gaps are
/// dropped with a warning.
pub fn fit_rate(horizons: &[f64], gaps: &[f64]) -> Result<RateFit> {
    if horizons.len() != gaps.len() {
        return Err(Error::invalid("gaps", "length differs from the horizon list"));
    }
    let pts: Vec<(f64, f64)> = horizons
        .iter()
        .zip(gaps)
        .filter_map(|(&t, &g)| {
            if g > 0.0 && t > 0.0 {
                Some((t.ln(), g.ln()))
            } else {
                log::warn!("fit_rate: dropping non-positive point (T={t}, gap={g})");
                None
            }
        })
        .collect();
    let n = pts.len();
    if n < 4 {
        return Err(Error::TooFewPoints {
            what: "rate fit",
            needed: 4,
            got: n,
        });
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        stderr,
        intercept,
        points: n,
    })
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Aggregates are a pure function of the raw rows.
pub fn aggregate_rows(rows: &[RawRow]) -> Vec<AggregateRow> {
    let mut horizons: Vec<usize> = rows.iter().map(|r| r.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    horizons
        .into_iter()
        .map(|t| {
            let sel: Vec<&RawRow> = rows.iter().filter(|r| r.horizon == t).collect();
            let gaps: Vec<f64> = sel.iter().map(|r| r.gap).collect();
            let regrets: Vec<f64> = sel.iter().map(|r| r.regret).collect();
            AggregateRow {
                horizon: t,
                runs: sel.len(),
                mean_gap: mean(&gaps),
                median_gap: median(&gaps),
                mean_regret: mean(&regrets),
                median_regret: median(&regrets),
                total_clips: sel.iter().map(|r| r.clips).sum(),
            }
        })
        .collect()
}

fn gap_fit(per_horizon: &[AggregateRow]) -> Option<RateFit> {
    let ts: Vec<f64> = per_horizon.iter().map(|r| r.horizon as f64).collect();
    let gs: Vec<f64> = per_horizon.iter().map(|r| r.mean_gap).collect();
    fit_rate(&ts, &gs).ok()
}

/// Runs `seeds x horizons` conversions in parallel. Writes `raw.csv`,
/// `aggregate.json` and, with tracing on, per-run traces when the config
/// names an output directory.
pub fn run_suite(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let instance = config.instance.build()?;
    let budget = config.privacy.budget();
    let eps = budget_over_grid(&budget)?;
    let max_t = *config.horizons.iter().max().expect("validated non-empty");
    let report = budget_report(&budget, max_t)?;
    let cfg = config.run_config();

    let jobs: Vec<(usize, usize)> = config
        .horizons
        .iter()
        .flat_map(|&t| (0..config.seeds).map(move |s| (t, s)))
        .collect();
    // (horizon, seed, run with wall time)
    type Outcome = (usize, usize, Result<(RunOutput, u64)>);
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(t, s)| {
            let started = Instant::now();
            let out = single_run(config, &instance, t, s);
            let ms = if config.record_wall_time {
                started.elapsed().as_millis() as u64
            } else {
                0
            };
            (t, s, out.map(|o| (o, ms)))
        })
        .collect();

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (t, s, outcome) in outcomes {
        match outcome {
            Ok((output, wall_ms)) => {
                rows.push(RawRow {
                    variant: cfg.variant.mode.as_str().to_string(),
                    k: cfg.variant.k,
                    horizon: t,
                    seed: s,
                    gap: instance.population_gap(&output.x_final),
                    regret: output.regret(instance.optimum()),
                    eps,
                    clips: output.clips,
                    wall_ms,
                });
                records.push(RunRecord {
                    horizon: t,
                    seed: s,
                    output,
                });
            }
            Err(e) => {
                log::error!("run T={t} seed={s} failed: {e}");
                failures.push(RunFailure {
                    horizon: t,
                    seed: s,
                    error: e.to_string(),
                });
            }
        }
    }

    let per_horizon = aggregate_rows(&rows);
    let aggregate = Aggregate {
        variant: cfg.variant.mode.as_str().to_string(),
        learner: config.learner.as_str().to_string(),
        k: cfg.variant.k,
        budget: report,
        gap_rate: gap_fit(&per_horizon),
        per_horizon,
        failures,
    };
    let result = RunResult {
        rows,
        aggregate,
        records,
    };
    if let Some(dir) = &config.output {
        write_outputs(dir, config, &instance, &result)?;
    }
    Ok(result)
}

/// One conversion run `(T, seed_index)` of `config`.
pub fn single_run(config: &ExperimentConfig, instance: &ProblemInstance, horizon: usize, seed: usize) -> Result<RunOutput> {
    let cfg = config.run_config();
    let rng = Rng::new(run_seed(config.master_seed, horizon, seed));
    let data = instance.sample_dataset(horizon, &mut rng.split(DATA_STREAM));
    let cap = learner_cap(instance, &cfg, horizon)?;
    let mut learner = config.learner.build(instance.domain(), cap)?;
    run(instance, learner.as_mut(), &data, &cfg, &rng)
}

pub fn write_raw_csv(path: &Path, rows: &[RawRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_raw_csv(path: &Path) -> Result<Vec<RawRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_outputs(dir: &Path, config: &ExperimentConfig, instance: &ProblemInstance, result: &RunResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_raw_csv(&dir.join("raw.csv"), &result.rows)?;
    let agg = dir.join("aggregate.json");
    std::fs::write(&agg, serde_json::to_string_pretty(&result.aggregate)?).map_err(|e| Error::io(&agg, e))?;
    if config.trace {
        for rec in &result.records {
            write_trace(dir, config, instance, rec)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceHeader<'a> {
    variant: &'a str,
    k: u32,
    rho: Option<f64>,
    alpha_grid: &'a [f64],
    delta: f64,
    seed: u64,
    instance: crate::problems::InstanceDescriptor,
}

fn write_trace(dir: &Path, config: &ExperimentConfig, instance: &ProblemInstance, rec: &RunRecord) -> Result<()> {
    let stem = format!("trace_{}_{}", rec.horizon, rec.seed);
    let path = dir.join(format!("{stem}.csv"));
    let mut file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let io = |e| Error::io(&path, e);
    writeln!(file, "t,index_set,gap,g_norm,gamma_norm,sigma,delta_norm,max_disp,clip").map_err(io)?;
    for row in &rec.output.trace {
        let set: Vec<String> = row.index_set.iter().map(usize::to_string).collect();
        writeln!(
            file,
            "{},{},{},{},{},{},{},{},{}",
            row.t,
            set.join(" "),
            row.gap.map_or_else(String::new, |g| g.to_string()),
            row.g_norm,
            row.gamma_norm,
            row.sigma,
            row.delta_norm,
            row.max_disp,
            u8::from(row.clip)
        )
        .map_err(io)?;
    }
    let header = TraceHeader {
        variant: config.variant.mode.as_str(),
        k: config.variant.k,
        rho: config.privacy.rho,
        alpha_grid: &config.privacy.alpha_grid,
        delta: config.privacy.delta,
        seed: run_seed(config.master_seed, rec.horizon, rec.seed),
        instance: instance.descriptor(),
    };
    let hp = dir.join(format!("{stem}.json"));
    std::fs::write(&hp, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&hp, e))
}
