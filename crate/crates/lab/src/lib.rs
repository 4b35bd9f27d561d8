//! Experiment harness for Sharpe-ratio bandit policies.
//!
//! - [`config`]: the flat `key = value` experiment files.
//! - [`experiment`]: replicated runs, ρ sweeps and theory-curve overlays.
//! - [`emit`] and [`svg`]: CSV, metadata and chart output.
//! - [`verify`]: numerical checks of the tail lemmas and the pull-count
//!   variance bound.

// Range checks are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod svg;
pub mod verify;

pub use config::{load_config, parse_config, ExperimentConfig, InstanceSpec, PolicySpec};
pub use error::{ConfigError, LabError, Result};
pub use experiment::{run_experiment, sweep_rho, ExperimentResult, PolicyCurve, SweepResult};
pub use verify::{verify_lemmas, VerifyOptions, VerifyReport};
