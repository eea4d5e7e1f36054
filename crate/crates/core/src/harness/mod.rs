//! Dataset-level operations: corrupting a manifest, scoring submissions,
//! ranking score tables and the reproducibility self-test.

pub mod corrupt;
pub mod selftest;
pub mod eval;
pub mod report;
pub mod table;

pub use corrupt::{camera_seed, corrupt_dataset, CorruptOptions, CorruptReport};
pub use eval::{evaluate_submission, EvalOptions};
pub use report::{rank_tables, Leaderboard, LeaderboardEntry};
pub use selftest::{run_selftest, SelftestReport, EMBEDDED_VECTORS};
pub use table::{headline, ScoreRow, ScoreTable, TableMetadata, TOOLKIT_VERSION};

use crate::error::{Error, Result};

/// Run `f` on a dedicated pool of `jobs` threads (all cores for `None`).
pub(crate) fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == Some(0) {
        return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
