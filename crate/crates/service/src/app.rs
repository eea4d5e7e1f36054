use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::{mpsc as std_mpsc, Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use tokio::sync::{mpsc, oneshot};
use uuid::Uuid;

use robobench_core::depth::DepthConfig;
use robobench_core::harness::{evaluate_submission, EvalOptions, Leaderboard, ScoreTable};
use robobench_core::io::manifest::Manifest;
use robobench_core::io::submission::{parse_submission_str, PathPolicy};
use robobench_core::params::ParamsTable;
use robobench_core::Track;

use crate::config::ServiceConfig;
use crate::error::{Result, ServiceError};
use crate::journal::{Event, Journal, HEADER_LEN};
use crate::state::{read_snapshot, write_snapshot, Index, Status, SubmissionRecord};

const JOURNAL_FILE: &str = "journal";
const SNAPSHOT_FILE: &str = "snapshot.json";
const PAYLOAD_DIR: &str = "payloads";

#[derive(Debug, Clone, Serialize)]
pub struct Submitted {
    pub submission_id: Uuid,
    pub status: Status,
}

#[derive(Debug, thiserror::Error)]
pub enum SubmitError {
    #[error("unknown track `{0}`")]
    UnknownTrack(String),
    /// Schema or consistency violation; `record` is the offending line's index.
    #[error("{message}")]
    Invalid { message: String, record: Option<usize> },
    #[error("missing or wrong token for team `{0}`")]
    Unauthorized(String),
    #[error("team `{team}` reached the limit of {limit} submissions per day on {track}")]
    RateLimited { team: String, track: Track, limit: u32 },
    #[error(transparent)]
    Internal(#[from] ServiceError),
}

impl From<robobench_core::Error> for SubmitError {
    fn from(e: robobench_core::Error) -> Self {
        let record = match &e {
            robobench_core::Error::Submission { record, .. } => Some(*record),
            _ => None,
        };
        SubmitError::Invalid { message: e.to_string(), record }
    }
}

enum Command {
    Submit { team: String, method: String, track: Track, payload: String, reply: oneshot::Sender<Result<Uuid, SubmitError>> },
    /// Claim a job; the reply says whether to score it.
    Start { id: Uuid, reply: oneshot::Sender<bool> },
    Finish { id: Uuid, outcome: std::result::Result<ScoreTable, String> },
    Shutdown,
}

struct TrackCtx {
    manifest: Manifest,
    opts: EvalOptions,
}

/// A running service: the writer thread, one scoring thread per track and
/// the shared read view. HTTP is layered on top in [`crate::router`].
pub struct Service {
    config: ServiceConfig,
    tracks: BTreeMap<Track, Arc<TrackCtx>>,
    index: Arc<RwLock<Arc<Index>>>,
    commands: mpsc::UnboundedSender<Command>,
    threads: Mutex<Vec<JoinHandle<()>>>,
}

impl Service {
    /// Recover state from `data_dir`, then start the writer and workers.
    /// Submissions left queued or mid-scoring by a crash are re-enqueued.
    pub fn start(config: ServiceConfig) -> Result<Arc<Service>> {
        let payloads = config.data_dir.join(PAYLOAD_DIR);
        std::fs::create_dir_all(&payloads).map_err(|e| ServiceError::io(&payloads, e))?;
        let params_hash = match &config.params {
            Some(p) => ParamsTable::load(p)?.hash().to_string(),
            None => ParamsTable::canonical().hash().to_string(),
        };
        let mut tracks = BTreeMap::new();
        for (&track, tc) in &config.tracks {
            let manifest = Manifest::load(&tc.manifest)?;
            if manifest.track != track {
                return Err(ServiceError::Config(format!(
                    "manifest {} is for track {}, configured under {track}",
                    tc.manifest.display(),
                    manifest.track
                )));
            }
            let depth = DepthConfig { median_scaling: tc.median_scaling, micro_average: tc.micro_average, ..DepthConfig::default() };
            let opts = EvalOptions { depth, seed: config.seed, params_hash: params_hash.clone(), timestamp: None, jobs: None };
            tracks.insert(track, Arc::new(TrackCtx { manifest, opts }));
        }

        let (journal, index) = recover(&config.data_dir)?;
        let published = Arc::new(RwLock::new(Arc::new(index.clone())));
        let (commands, rx) = mpsc::unbounded_channel();
        let mut threads = Vec::new();
        let mut queues = BTreeMap::new();
        for (&track, ctx) in &tracks {
            let (tx, jobs) = std_mpsc::channel();
            let worker = Worker {
                ctx: ctx.clone(),
                commands: commands.clone(),
                payloads: payloads.clone(),
                delay: Duration::from_millis(config.score_delay_ms),
            };
            threads.push(spawn_thread(format!("score-{track}"), move || worker.run(jobs))?);
            queues.insert(track, tx);
        }
        for r in index.iter().filter(|r| !r.status.is_terminal()) {
            match queues.get(&r.track) {
                Some(q) => q.send(r.submission_id).expect("worker alive"),
                None => tracing::warn!("submission {} is pending on unconfigured track {}", r.submission_id, r.track),
            }
        }
        let writer = Writer {
            journal,
            index,
            published: published.clone(),
            queues,
            data_dir: config.data_dir.clone(),
            payloads,
            daily_limit: config.daily_limit,
            snapshot_every: config.snapshot_every,
            since_snapshot: 0,
        };
        threads.push(spawn_thread("journal-writer".into(), move || writer.run(rx))?);
        Ok(Arc::new(Service { config, tracks, index: published, commands, threads: Mutex::new(threads) }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn has_track(&self, track: Track) -> bool {
        self.tracks.contains_key(&track)
    }

    /// The last committed state.
    pub fn index(&self) -> Arc<Index> {
        self.index.read().expect("index lock").clone()
    }

    pub fn get(&self, id: &Uuid) -> Option<SubmissionRecord> {
        self.index().get(id).cloned()
    }

    pub fn leaderboard(&self, track: Track) -> std::result::Result<Leaderboard, SubmitError> {
        if !self.has_track(track) {
            return Err(SubmitError::UnknownTrack(track.to_string()));
        }
        self.index().leaderboard(track).map_err(|e| SubmitError::Internal(e.into()))
    }

    /// Validate `payload` (JSON-lines, inline data only) and persist it as
    /// queued. `token` is the bearer token presented with the request.
    pub async fn submit(&self, track: Track, payload: String, token: Option<&str>) -> std::result::Result<Submitted, SubmitError> {
        let ctx = self.tracks.get(&track).ok_or_else(|| SubmitError::UnknownTrack(track.to_string()))?.clone();
        let (payload, header) = tokio::task::spawn_blocking(move || {
            let sub = parse_submission_str(&payload, track, PathPolicy::InlineOnly)?;
            sub.check_against(&ctx.manifest)?;
            Ok::<_, SubmitError>((payload, sub.header))
        })
        .await
        .map_err(|_| SubmitError::Internal(ServiceError::Shutdown))??;
        let tokens = &self.config.tokens;
        if !tokens.is_empty() && (token.is_none() || tokens.get(&header.team).map(String::as_str) != token) {
            return Err(SubmitError::Unauthorized(header.team));
        }
        let (reply, rx) = oneshot::channel();
        self.commands
            .send(Command::Submit { team: header.team, method: header.method, track, payload, reply })
            .map_err(|_| ServiceError::Shutdown)?;
        let id = rx.await.map_err(|_| ServiceError::Shutdown)??;
        Ok(Submitted { submission_id: id, status: Status::Queued })
    }

    /// Stop accepting work and wait for the threads. A job being scored is
    /// abandoned in the `scoring` state and resumed on the next start.
    pub fn shutdown(&self) {
        let _ = self.commands.send(Command::Shutdown);
        let threads = std::mem::take(&mut *self.threads.lock().expect("thread list"));
        for t in threads {
            let _ = t.join();
        }
    }
}

fn spawn_thread(name: String, f: impl FnOnce() + Send + 'static) -> Result<JoinHandle<()>> {
    std::thread::Builder::new().name(name).spawn(f).map_err(|e| ServiceError::io("<thread>", e))
}

/// Rebuild the index from the snapshot (when it matches the journal) plus
/// the journal events after it.
fn recover(data_dir: &Path) -> Result<(Journal, Index)> {
    let (journal, decoded) = Journal::open(&data_dir.join(JOURNAL_FILE))?;
    if decoded.torn {
        tracing::warn!("discarded a torn journal tail at offset {}", decoded.valid_len);
    }
    let on_boundary = |off: u64| off == HEADER_LEN || decoded.events.iter().any(|(end, _)| *end == off);
    let (mut index, from) = match read_snapshot(&data_dir.join(SNAPSHOT_FILE)) {
        Some((ix, off)) if off <= decoded.valid_len && on_boundary(off) => (ix, off),
        Some(_) => {
            tracing::warn!("snapshot does not match the journal; replaying from the start");
            (Index::default(), 0)
        }
        None => (Index::default(), 0),
    };
    for (end, ev) in decoded.events.iter().filter(|(end, _)| *end > from) {
        index.apply(ev).map_err(|e| ServiceError::Journal(format!("replay of event ending at {end}: {e}")))?;
    }
    Ok((journal, index))
}

struct Writer {
    journal: Journal,
    index: Index,
    published: Arc<RwLock<Arc<Index>>>,
    queues: BTreeMap<Track, std_mpsc::Sender<Uuid>>,
    data_dir: PathBuf,
    payloads: PathBuf,
    daily_limit: u32,
    snapshot_every: u64,
    since_snapshot: u64,
}

impl Writer {
    fn run(mut self, mut rx: mpsc::UnboundedReceiver<Command>) {
        while let Some(cmd) = rx.blocking_recv() {
            match cmd {
                Command::Submit { team, method, track, payload, reply } => {
                    let _ = reply.send(self.submit(team, method, track, &payload));
                }
                Command::Start { id, reply } => {
                    let go = match self.index.get(&id).map(|r| r.status) {
                        Some(Status::Queued) => self.commit(Event::ScoringStarted { id }).is_ok(),
                        // Claimed before a restart: resume.
                        Some(Status::Scoring) => true,
                        _ => false,
                    };
                    let _ = reply.send(go);
                }
                Command::Finish { id, outcome } => {
                    if self.index.get(&id).map(|r| r.status) != Some(Status::Scoring) {
                        tracing::warn!("dropping result for submission {id}, which is not being scored");
                        continue;
                    }
                    let ev = match outcome {
                        Ok(table) => Event::Scored { id, table: Box::new(table) },
                        Err(reason) => Event::Failed { id, reason },
                    };
                    let _ = self.commit(ev);
                }
                Command::Shutdown => break,
            }
        }
    }

    fn submit(&mut self, team: String, method: String, track: Track, payload: &str) -> std::result::Result<Uuid, SubmitError> {
        let received_at = Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true);
        if self.index.count_on_day(&team, track, &received_at[..10]) >= self.daily_limit as usize {
            return Err(SubmitError::RateLimited { team, track, limit: self.daily_limit });
        }
        let id = loop {
            let id = Uuid::new_v4();
            if self.index.get(&id).is_none() {
                break id;
            }
        };
        // The payload must be durable before the event that refers to it.
        crate::write_atomic(&payload_path(&self.payloads, id), payload.as_bytes())?;
        self.commit(Event::Submitted { id, team, method, track, received_at })?;
        if let Some(q) = self.queues.get(&track) {
            let _ = q.send(id);
        }
        Ok(id)
    }

    /// Journal `ev`, then apply and publish it.
    fn commit(&mut self, ev: Event) -> Result<()> {
        self.index.check(&ev).map_err(ServiceError::Journal)?;
        if let Err(e) = self.journal.append(&ev) {
            tracing::error!("journal append failed: {e}");
            return Err(e);
        }
        self.index.apply(&ev).expect("checked above");
        *self.published.write().expect("index lock") = Arc::new(self.index.clone());
        self.since_snapshot += 1;
        if self.since_snapshot >= self.snapshot_every {
            match write_snapshot(&self.data_dir.join(SNAPSHOT_FILE), &self.index, self.journal.len()) {
                Ok(()) => self.since_snapshot = 0,
                Err(e) => tracing::warn!("snapshot failed: {e}"),
            }
        }
        Ok(())
    }
}

fn payload_path(dir: &Path, id: Uuid) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

struct Worker {
    ctx: Arc<TrackCtx>,
    commands: mpsc::UnboundedSender<Command>,
    payloads: PathBuf,
    delay: Duration,
}

impl Worker {
    fn run(self, jobs: std_mpsc::Receiver<Uuid>) {
        while let Ok(id) = jobs.recv() {
            let (reply, rx) = oneshot::channel();
            if self.commands.send(Command::Start { id, reply }).is_err() {
                return;
            }
            match rx.blocking_recv() {
                Ok(true) => {}
                Ok(false) => continue,
                Err(_) => return,
            }
            if !self.delay.is_zero() {
                std::thread::sleep(self.delay);
            }
            let outcome = self.score(&payload_path(&self.payloads, id));
            if self.commands.send(Command::Finish { id, outcome }).is_err() {
                return;
            }
        }
    }

    fn score(&self, path: &Path) -> std::result::Result<ScoreTable, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("payload unavailable: {e}"))?;
        let ctx = &self.ctx;
        catch_unwind(AssertUnwindSafe(|| {
            let sub = parse_submission_str(&text, ctx.manifest.track, PathPolicy::InlineOnly)?;
            evaluate_submission(&ctx.manifest, &sub, &ctx.opts)
        }))
        .map_err(|_| "internal error while scoring".to_string())?
        .map_err(|e| e.to_string())
    }
}
