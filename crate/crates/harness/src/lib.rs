//! Configuration, persistence and reporting around the `lcd-spectra` solver.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod oracle;
pub mod runner;
pub mod series;
pub mod sweep;

pub use config::RunConfig;
pub use error::{HarnessError, Result};
pub use runner::{resume, run, RunOutcome, Summary, Verdict};

/// Environment variable bounding the solver's worker threads.
pub const THREADS_ENV: &str = "LCD_SPECTRA_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| HarnessError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HarnessError::Usage(format!("{THREADS_ENV}: {e}")))
}
