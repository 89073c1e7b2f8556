//! Config-driven experiments: parse, run every tuple, write CSVs.

mod config;
mod output;
mod runner;

pub use config::{
    parse_config, validate_runs, AlgorithmOverrides, AlgorithmSpec, ExperimentConfig, InitRule, MetricOptions,
    ALGORITHM_NAMES,
};
pub use output::{
    compare_table, fmt_float, parse_summary_csv, summary_csv, summary_row, trajectory_csv, trajectory_file_name,
    trajectory_header, write_csv, write_plot_script, SummaryRow, SUMMARY_COLUMNS,
};
pub use runner::{
    bounding_box, build_learner, initial_point, run_experiment, splitmix64, tuple_seed, RunOptions, RunOutput,
    TupleKey, TupleResult,
};
