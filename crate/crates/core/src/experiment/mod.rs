//! Experiment driver: configuration, simulation to a results directory,
//! hermetic analysis, the random-channel sweep and the verification suite.

pub mod config;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{ChannelSource, ExperimentConfig, NoiseConfig};
pub use run::{analyze_dir, simulate_to_dir, Metadata, Report, RunPlan};
pub use sweep::{run_sweep, write_sweep, SweepConfig, SweepRow, SweepSummary};
pub use verify::{run_verify, Check};
