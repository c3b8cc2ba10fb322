//! Experiment configuration, the preset catalog, deterministic runs and
//! result files.

pub mod catalog;
pub mod config;
pub mod run;

pub use catalog::{build_preset, catalog, hypergeometric_slots, DivisorSpec, Preset, PresetInfo, PresetParams};
pub use config::{load_config, parse_config, ExperimentConfig, LoadedConfig, OUTPUT_ROOT_ENV};
pub use run::{replay, run, run_in, ReplayOutcome, RunRecord, EXPERIMENTS};
