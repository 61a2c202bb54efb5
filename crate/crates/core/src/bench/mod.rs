//! Experiment harness: synthetic networks, recovery and localization
//! runs, and CSV output.
//!
//! Every random choice is drawn from a generator seeded by
//! [`derive_seed`](crate::diffusion::derive_seed) from the base seed and the
//! trial index, so results do not depend on thread scheduling and every
//! setting of a run sees the same cascades.

mod config;
mod csv_out;
mod experiment;
mod network;

pub use config::{mode_name, parse_mode, sensor_count, CsBasis, ExperimentConfig, NetworkSource, RecoveryMethod};
pub use csv_out::{csv_row, emit_csv, CsvSink, CSV_HEADER};
pub use experiment::{
    block_split, load_network, run_localization_experiment, run_recovery_experiment, Experiment, MetricsRecord,
    TrialRecord,
};
pub use network::{generate_network, DelayModel, NetworkFamily, VarianceModel};
