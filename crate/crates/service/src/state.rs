use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use robobench_core::harness::{rank_tables, Leaderboard, ScoreTable};
use robobench_core::Track;

use crate::error::Result;
use crate::journal::Event;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Queued,
    Scoring,
    Scored,
    Failed,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        matches!(self, Status::Scored | Status::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub submission_id: Uuid,
    pub team: String,
    pub method: String,
    pub track: Track,
    pub received_at: String,
    pub status: Status,
    pub score_table: Option<ScoreTable>,
    pub failure_reason: Option<String>,
}

/// In-memory view rebuilt from the journal. Only [`Index::apply`] mutates it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Index {
    records: HashMap<Uuid, SubmissionRecord>,
    order: Vec<Uuid>,
}

impl Index {
    pub fn get(&self, id: &Uuid) -> Option<&SubmissionRecord> {
        self.records.get(id)
    }

    /// Records in the order they were received.
    pub fn iter(&self) -> impl Iterator<Item = &SubmissionRecord> {
        self.order.iter().map(|id| &self.records[id])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Check that `ev` is a legal transition without applying it.
    pub fn check(&self, ev: &Event) -> std::result::Result<(), String> {
        let status = self.records.get(&ev.id()).map(|r| r.status);
        let ok = matches!(
            (ev, status),
            (Event::Submitted { .. }, None)
                | (Event::ScoringStarted { .. }, Some(Status::Queued))
                | (Event::Scored { .. } | Event::Failed { .. }, Some(Status::Scoring))
        );
        if ok {
            Ok(())
        } else {
            Err(format!("illegal event {} for submission {} in state {status:?}", kind(ev), ev.id()))
        }
    }

    pub fn apply(&mut self, ev: &Event) -> std::result::Result<(), String> {
        self.check(ev)?;
        match ev {
            Event::Submitted { id, team, method, track, received_at } => {
                self.records.insert(
                    *id,
                    SubmissionRecord {
                        submission_id: *id,
                        team: team.clone(),
                        method: method.clone(),
                        track: *track,
                        received_at: received_at.clone(),
                        status: Status::Queued,
                        score_table: None,
                        failure_reason: None,
                    },
                );
                self.order.push(*id);
            }
            Event::ScoringStarted { id } => self.record(id).status = Status::Scoring,
            Event::Scored { id, table } => {
                let r = self.record(id);
                r.status = Status::Scored;
                r.score_table = Some((**table).clone());
            }
            Event::Failed { id, reason } => {
                let r = self.record(id);
                r.status = Status::Failed;
                r.failure_reason = Some(reason.clone());
            }
        }
        Ok(())
    }

    fn record(&mut self, id: &Uuid) -> &mut SubmissionRecord {
        self.records.get_mut(id).expect("checked")
    }

    /// Submissions by `team` on `track` whose receipt date (UTC) is `day`.
    pub fn count_on_day(&self, team: &str, track: Track, day: &str) -> usize {
        self.iter().filter(|r| r.team == team && r.track == track && r.received_at.starts_with(day)).count()
    }

    /// Best scored submission per team. Tables without a timestamp take the
    /// receipt time so earlier submissions win ties.
    pub fn leaderboard(&self, track: Track) -> robobench_core::Result<Leaderboard> {
        let tables = self.scored_tables(track);
        if tables.is_empty() {
            return Ok(Leaderboard { track, metric: track.metric(), columns: track.corruptions(), entries: vec![] });
        }
        rank_tables(&tables, true)
    }

    pub fn scored_tables(&self, track: Track) -> Vec<ScoreTable> {
        self.iter()
            .filter(|r| r.track == track)
            .filter_map(|r| {
                let mut t = r.score_table.clone()?;
                t.metadata.timestamp.get_or_insert_with(|| r.received_at.clone());
                Some(t)
            })
            .collect()
    }
}

fn kind(ev: &Event) -> &'static str {
    match ev {
        Event::Submitted { .. } => "submitted",
        Event::ScoringStarted { .. } => "scoring_started",
        Event::Scored { .. } => "scored",
        Event::Failed { .. } => "failed",
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    journal_len: u64,
    records: Vec<SubmissionRecord>,
}

/// Write the index atomically (temp file, fsync, rename).
pub fn write_snapshot(path: &Path, index: &Index, journal_len: u64) -> Result<()> {
    let snap = SnapshotFile { journal_len, records: index.iter().cloned().collect() };
    crate::write_atomic(path, &serde_json::to_vec(&snap).expect("snapshots serialize"))
}

/// Load a snapshot; `None` when absent or unreadable (replay starts over).
pub fn read_snapshot(path: &Path) -> Option<(Index, u64)> {
    let bytes = std::fs::read(path).ok()?;
    let snap: SnapshotFile = match serde_json::from_slice(&bytes) {
        Ok(s) => s,
        Err(e) => {
            tracing::warn!("ignoring unreadable snapshot {}: {e}", path.display());
            return None;
        }
    };
    let mut index = Index::default();
    for r in snap.records {
        index.order.push(r.submission_id);
        if index.records.insert(r.submission_id, r).is_some() {
            tracing::warn!("ignoring snapshot {} with duplicate ids", path.display());
            return None;
        }
    }
    Some((index, snap.journal_len))
}
