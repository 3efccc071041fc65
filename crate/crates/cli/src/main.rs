use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dpotb::accounting::{budget_report, PrivacyBudget};
use dpotb::harness::{compare_variants, run_suite, verify_all, ExperimentConfig, Level};

#[derive(Parser)]
#[command(name = "dpotb", version, about = "Private online-to-batch conversion benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-seed suite and write raw.csv, aggregate.json and traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed count.
        #[arg(long)]
        seeds: Option<usize>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes per-round traces.
        #[arg(long)]
        trace: bool,
    },
    /// Run the acceptance checks; exits non-zero if any fails.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        /// Print the report as JSON instead of one line per check.
        #[arg(long)]
        json: bool,
    },
    /// Run every arm of a config on matched seeds and print a table.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Also writes the table as compare.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the grid-optimized (epsilon, delta) for a zCDP-style budget rho.
    Budget {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1024)]
        horizon: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Fast => Level::Fast,
            LevelArg::Full => Level::Full,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> dpotb::Result<ExitCode> {
    match command {
        Command::Run {
            config,
            seeds,
            out,
            trace,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if out.is_some() {
                cfg.output = out;
            }
            cfg.trace |= trace;
            cfg.validate()?;
            let res = run_suite(&cfg)?;
            let agg = &res.aggregate;
            println!("{} / {} / k = {} / eps = {:.4}", agg.variant, agg.learner, agg.k, agg.budget.epsilon);
            println!("{:>8} {:>5} {:>13} {:>13} {:>13}", "T", "runs", "mean gap", "median gap", "mean regret");
            for row in &agg.per_horizon {
                println!(
                    "{:>8} {:>5} {:>13.4e} {:>13.4e} {:>13.4e}",
                    row.horizon, row.runs, row.mean_gap, row.median_gap, row.mean_regret
                );
            }
            if let Some(fit) = agg.gap_rate {
                println!("gap slope {:.3} +- {:.3} over {} horizons", fit.slope, fit.stderr, fit.points);
            }
            for f in &agg.failures {
                eprintln!("run T={} seed={} failed: {}", f.horizon, f.seed, f.error);
            }
            if let Some(dir) = &cfg.output {
                log::info!("wrote results to {}", dir.display());
            }
            Ok(if agg.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Verify { level, json } => {
            let report = verify_all(level.into());
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Compare { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let cmp = compare_variants(&cfg)?;
            println!("{}", cmp.table);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| dpotb::Error::Io { path: dir.clone(), source: e })?;
                let path = dir.join("compare.json");
                let body = serde_json::to_string_pretty(&cmp.table)?;
                std::fs::write(&path, body).map_err(|e| dpotb::Error::Io { path, source: e })?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Budget { rho, delta, horizon } => {
            let report = budget_report(&PrivacyBudget::new(rho, delta)?, horizon)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
