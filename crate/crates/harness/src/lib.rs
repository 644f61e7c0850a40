//! Experiment configuration, execution and reporting for `asymflow`.
//!
//! A [`RunConfig`] names one experiment. [`run`] executes it and writes
//! `manifest.json` (reproducible), `timings.json` (wall clock), CSV traces
//! under `traces/` and field containers under `fields/`. [`report`]
//! aggregates finished runs into a pass/fail table.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod report;

pub use config::{Overrides, RunConfig};
pub use experiments::{run, run_with_timings};
pub use manifest::{Check, RunManifest, Timings};
pub use report::{report, Summary};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ASYMFLOW_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    }
    Ok(())
}
