//! Experiment orchestration: configs, multi-seed suites, rate fits,
//! variant comparisons and the verification checks.

mod compare;
mod config;
pub mod oracles;
mod suite;
mod verify;

pub use compare::{compare_variants, ArmHorizon, ArmSummary, CompareTable, Comparison};
pub use config::{ArmSpec, ExperimentConfig, Family, InstanceSpec, PrivacySpec};
pub use suite::{
    aggregate_rows, fit_rate, mean, median, read_raw_csv, run_seed, run_suite, single_run, write_raw_csv, Aggregate,
    AggregateRow, RateFit, RawRow, RunFailure, RunRecord, RunResult, DATA_STREAM,
};
pub use verify::*;
