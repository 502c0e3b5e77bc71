//! Configuration-driven runs behind the `grownplate` binary.

pub mod config;
pub mod run;

pub use config::{Mode, RunConfig, ScalingConfig, SweepConfig};
pub use run::{exit_code, run, Outcome};
