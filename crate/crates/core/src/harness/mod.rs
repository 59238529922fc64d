//! Experiment driver: play sampling, budgets, running the learners on a
//! shared play sequence, and writing the results.

mod config;
mod report;
mod run;

pub use config::{Algorithm, DatasetSource, PlayBudget, RunConfig, SliceLearner};
pub use report::{emit_outputs, loss_plot, moving_average, round_average, write_dataset};
pub use run::{
    compute_tau_beta, generate_dataset, load_truth, oteg_setup, run_experiment,
    sample_play_sequence, DecompParams, Experiment, ExperimentTrace, GeneratedData,
    FOREL_RADIUS_FACTOR,
};
