//! Configuration, initial data, persistence, experiment runs and verification suites.

pub mod config;
pub mod data;
pub mod experiment;
pub mod io;
pub mod verify;

pub use data::{generate_initial_data, power_law_field, tail_exponent, DataKind, DataSpec, GeneratedData, PhaseStream};
pub use io::{decode_pcf1, encode_pcf1, read_pcf1, runlog_csv, write_pcf1, RunLogRow};
pub use config::{RunConfig, PRESETS};
pub use experiment::{diagnose_stage, evolve_stage, gen_data_stage, load_run, run_experiment, ExperimentOutcome};
pub use verify::{random_field, verify, verify_with, Check, VerifyReport, SUITES};
