//! Experiment harness for the foraging controllers: scenario matrices,
//! resumable runs with per-step throughput and timing, replicate
//! aggregation and plots.

pub mod aggregate;
pub mod error;
pub mod matrix;
pub mod runner;
pub mod timing;
pub mod train_config;

pub use aggregate::{emit_outputs, render_svg, Curve, SeriesStats};
pub use error::HarnessError;
pub use matrix::{draw_wipeouts, generate, read_scenarios, write_scenarios, CellKey, MatrixConfig, ScenarioFile};
pub use runner::{bench, run_experiment, run_scenario, Algo, EpisodeMetrics, RunOptions, RunSummary};
pub use timing::TimingRecord;
pub use train_config::TrainFile;
