//! Experiment orchestration for `scrambler-core`: sweep configurations,
//! CSV and JSON output, and finite-size analysis of the results.

pub mod analyze;
pub mod config;
pub mod run;

pub use analyze::{analyze, FitRecord, GroupResult};
pub use config::{load, AnalyzeConfig, Experiment, RunConfig};
pub use run::{rg_json, run_experiment, Manifest, RunSummary};

/// Install the global thread pool. `None` keeps rayon's default of one
/// thread per hardware thread.
pub fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
