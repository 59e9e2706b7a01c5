//! Scoring learned labelings and comparing exploration policies.

mod experiment;
mod mi;
mod stats;

pub use experiment::{
    batch_oracle_labeling, run_experiment, schedules_from_str, schedules_to_string, ExperimentConfig,
    ExperimentResults, MapSource, RunKey, RunRow, Schedules, SummaryRow, RESULTS_SCHEMA, SUMMARY_SCHEMA,
    TIMINGS_SCHEMA,
};
pub use mi::{entropy, joint_support_entropy, mutual_information};
pub use stats::{chi_square_uniform, mann_whitney_u, mean, pooled_stddev, stddev, MannWhitney};
