//! Experiment harness: config files, Monte Carlo sweeps, figure presets,
//! CSV output, and the CLI wiring.

pub mod cli;
pub mod config;
pub mod csv;
pub mod sweep;

pub use cli::{cli_main, cli_main_with_output};
pub use sweep::{figure_preset, run_sweep, run_trials, Axis, SweepResult, SweepSpec};
