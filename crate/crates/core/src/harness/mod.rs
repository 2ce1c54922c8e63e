//! Experiment orchestration: configuration, BER and outage sweeps, CSV and
//! manifest output.

pub mod config;
pub mod csv;
pub mod run;

pub use config::{ExperimentConfig, Mode};
pub use csv::{emit_csv, parse_csv, write_manifest, ResultRow};
pub use run::{run_ber_sweep, run_experiment, run_outage_sweep, run_rates_point};
