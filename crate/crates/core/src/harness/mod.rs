//! Experiment runner: configuration, parallel trials, bound checks and
//! CSV / JSON-lines output.

mod bench;
mod config;
mod emit;
mod runner;

pub use bench::{bench_table, format_table, BenchConfig, BenchRow};
pub use config::{ClientSpec, ExperimentConfig, OutputFormat, Settings};
pub use emit::{emit, emit_json_lines, read_csv, write_json_lines, write_records, CSV_COLUMNS};
pub use runner::{run_experiment, trial_bound, ExperimentOutput, Summary, TrialRecord};
