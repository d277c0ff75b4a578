//! Experiment orchestration for the unitary-Brownian-motion laboratory:
//! JSON experiment configs, seeded Monte Carlo drivers with
//! schedule-independent reductions, verdict computation, and CSV/JSON
//! report emission. The mathematics lives in `ubm-core`; this crate owns
//! the std-side concerns (files, threads, the `ubmlab` binary).

pub mod config;
pub mod estimate;
pub mod formats;
pub mod report;
pub mod runner;

pub use config::ExperimentConfig;
pub use estimate::{Estimate, Verdict};
pub use report::{Report, Row};
pub use runner::{run_experiment, RunOptions};
