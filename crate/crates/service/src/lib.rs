//! Submission scoring service.
//!
//! Submissions are accepted over HTTP, persisted to a checksummed
//! append-only journal, scored asynchronously with the harness (one worker
//! per track) and ranked into per-track leaderboards. Every state change
//! goes through a single writer; readers see an immutable index snapshot.

mod app;
pub mod config;
pub mod error;
mod http;
pub mod journal;
pub mod state;

use std::io::Write;
use std::path::Path;

pub use app::{Service, SubmitError, Submitted};
pub use config::{ServiceConfig, TrackConfig};
pub use error::{Result, ServiceError};
pub use http::{router, run, spawn, ServerHandle};
pub use journal::{decode_journal, Event, Journal};
pub use state::{Index, Status, SubmissionRecord};

/// Fsync the directory holding `path` so a rename into it is durable.
pub(crate) fn sync_dir(path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    #[cfg(unix)]
    std::fs::File::open(dir).and_then(|f| f.sync_all()).map_err(|e| ServiceError::io(dir, e))?;
    Ok(())
}

/// Write `bytes` to `path` via a synced temporary file and rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let io = |e| ServiceError::io(&tmp, e);
    {
        let mut f = std::fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    std::fs::rename(&tmp, path).map_err(|e| ServiceError::io(path, e))?;
    sync_dir(path)
}
