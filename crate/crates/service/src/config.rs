use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use robobench_core::Track;
use serde::Deserialize;

use crate::error::{Result, ServiceError};

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}
fn default_daily_limit() -> u32 {
    5
}
fn default_snapshot_every() -> u64 {
    256
}
fn default_max_upload() -> usize {
    64 << 20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    /// Ground-truth manifest, loaded read-only at startup.
    pub manifest: PathBuf,
    #[serde(default)]
    pub median_scaling: bool,
    #[serde(default)]
    pub micro_average: bool,
}

/// Service configuration, read from TOML. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    /// Submissions per team per UTC day, per track.
    #[serde(default = "default_daily_limit")]
    pub daily_limit: u32,
    /// Pause before each scoring job; only useful for tests and demos.
    #[serde(default)]
    pub score_delay_ms: u64,
    /// Write a snapshot after this many journal events.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
    #[serde(default = "default_max_upload")]
    pub max_upload_bytes: usize,
    /// Recorded in score tables for manifests without provenance.
    #[serde(default)]
    pub seed: u64,
    /// Parameter table whose hash is recorded; the canonical one by default.
    #[serde(default)]
    pub params: Option<PathBuf>,
    /// team → static token. Empty means submissions are not authenticated.
    #[serde(default)]
    pub tokens: BTreeMap<String, String>,
    pub tracks: BTreeMap<Track, TrackConfig>,
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ServiceConfig = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        if cfg.tracks.is_empty() {
            return Err(ServiceError::Config("no tracks configured".into()));
        }
        if cfg.snapshot_every == 0 {
            return Err(ServiceError::Config("snapshot_every must be positive".into()));
        }
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        resolve(&mut cfg.data_dir);
        if let Some(p) = cfg.params.as_mut() {
            resolve(p);
        }
        for t in cfg.tracks.values_mut() {
            resolve(&mut t.manifest);
        }
        Ok(cfg)
    }
}
