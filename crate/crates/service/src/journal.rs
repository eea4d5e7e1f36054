//! Append-only event journal.
//!
//! Layout: the 7-byte magic `RBJRNL1`, one format-version byte (1), then
//! events. Each event is `[len: u32 LE][crc32: u32 LE][len bytes of JSON]`,
//! with the CRC-32 (IEEE) taken over the JSON bytes. A torn final event (short
//! read or bad checksum at the tail) is the footprint of a crash mid-append
//! and is truncated on open; damage anywhere else is a hard error.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use robobench_core::harness::ScoreTable;
use robobench_core::Track;

use crate::error::{Result, ServiceError};

pub const JOURNAL_MAGIC: &[u8; 7] = b"RBJRNL1";
pub const JOURNAL_VERSION: u8 = 1;
pub const HEADER_LEN: u64 = 8;
/// Upper bound on one event; larger length prefixes are treated as damage.
pub const MAX_EVENT_LEN: u32 = 256 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    Submitted { id: Uuid, team: String, method: String, track: Track, received_at: String },
    ScoringStarted { id: Uuid },
    Scored { id: Uuid, table: Box<ScoreTable> },
    Failed { id: Uuid, reason: String },
}

impl Event {
    pub fn id(&self) -> Uuid {
        match self {
            Event::Submitted { id, .. }
            | Event::ScoringStarted { id }
            | Event::Scored { id, .. }
            | Event::Failed { id, .. } => *id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Each event with the byte offset just past it.
    pub events: Vec<(u64, Event)>,
    /// Length of the intact prefix, header included.
    pub valid_len: u64,
    /// Whether bytes past `valid_len` were discarded as a torn write.
    pub torn: bool,
}

fn header() -> [u8; HEADER_LEN as usize] {
    let mut h = [0u8; HEADER_LEN as usize];
    h[..7].copy_from_slice(JOURNAL_MAGIC);
    h[7] = JOURNAL_VERSION;
    h
}

pub fn encode_event(ev: &Event) -> Vec<u8> {
    let json = serde_json::to_vec(ev).expect("events serialize");
    let mut out = Vec::with_capacity(json.len() + 8);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&json).to_le_bytes());
    out.extend_from_slice(&json);
    out
}

/// Decode a whole journal image. An empty input is a fresh journal.
pub fn decode_journal(bytes: &[u8]) -> Result<Decoded> {
    let h = header();
    if bytes.len() < h.len() {
        return if h.starts_with(bytes) {
            Ok(Decoded { events: vec![], valid_len: 0, torn: !bytes.is_empty() })
        } else {
            Err(ServiceError::Journal("bad magic".into()))
        };
    }
    if bytes[..7] != *JOURNAL_MAGIC {
        return Err(ServiceError::Journal("bad magic".into()));
    }
    if bytes[7] != JOURNAL_VERSION {
        return Err(ServiceError::Journal(format!("unsupported journal version {}", bytes[7])));
    }
    decode_events(bytes, HEADER_LEN)
}

/// Decode events starting at `offset` (which must be an event boundary).
pub fn decode_events(bytes: &[u8], offset: u64) -> Result<Decoded> {
    let mut pos = offset as usize;
    let mut events = Vec::new();
    let torn = |pos: usize, events| Ok(Decoded { events, valid_len: pos as u64, torn: true });
    while pos < bytes.len() {
        let rest = &bytes[pos..];
        if rest.len() < 8 {
            return torn(pos, events);
        }
        let len = u32::from_le_bytes(rest[0..4].try_into().unwrap());
        let crc = u32::from_le_bytes(rest[4..8].try_into().unwrap());
        let end = 8 + len as usize;
        if rest.len() < end {
            // A length prefix pointing past the end can only be a torn tail.
            return torn(pos, events);
        }
        if len > MAX_EVENT_LEN {
            return Err(ServiceError::Journal(format!("event at offset {pos} has impossible length {len}")));
        }
        let body = &rest[8..end];
        if crc32fast::hash(body) != crc {
            if end == rest.len() {
                return torn(pos, events);
            }
            return Err(ServiceError::Journal(format!("checksum mismatch in event at offset {pos}")));
        }
        let ev: Event = serde_json::from_slice(body)
            .map_err(|e| ServiceError::Journal(format!("undecodable event at offset {pos}: {e}")))?;
        pos += end;
        events.push((pos as u64, ev));
    }
    Ok(Decoded { events, valid_len: pos as u64, torn: false })
}

/// Open journal file positioned for appends.
pub struct Journal {
    path: PathBuf,
    file: File,
    len: u64,
}

impl Journal {
    /// Open (or create) the journal, truncating a torn tail. Returns the
    /// journal and everything it holds.
    pub fn open(path: &Path) -> Result<(Self, Decoded)> {
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(ServiceError::io(path, e)),
        };
        let full = decode_journal(&bytes)?;
        let file = OpenOptions::new().create(true).read(true).write(true).truncate(false).open(path)
            .map_err(|e| ServiceError::io(path, e))?;
        let mut j = Journal { path: path.to_path_buf(), file, len: full.valid_len };
        if full.torn || (bytes.len() as u64) != full.valid_len {
            j.file.set_len(full.valid_len).map_err(|e| ServiceError::io(path, e))?;
        }
        if j.len == 0 {
            j.write_all(&header())?;
        }
        j.sync()?;
        Ok((j, full))
    }

    fn write_all(&mut self, bytes: &[u8]) -> Result<()> {
        use std::io::{Seek, SeekFrom};
        self.file.seek(SeekFrom::Start(self.len)).map_err(|e| ServiceError::io(&self.path, e))?;
        self.file.write_all(bytes).map_err(|e| ServiceError::io(&self.path, e))?;
        self.len += bytes.len() as u64;
        Ok(())
    }

    fn sync(&mut self) -> Result<()> {
        self.file.sync_data().map_err(|e| ServiceError::io(&self.path, e))
    }

    /// Append one event durably; returns the offset just past it.
    pub fn append(&mut self, ev: &Event) -> Result<u64> {
        let start = self.len;
        if let Err(e) = self.write_all(&encode_event(ev)).and_then(|_| self.sync()) {
            // Drop the partial write so the next append starts on a boundary.
            self.len = start;
            let _ = self.file.set_len(start);
            return Err(e);
        }
        Ok(self.len)
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len <= HEADER_LEN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events() -> Vec<Event> {
        let id = Uuid::from_u128(7);
        vec![
            Event::Submitted {
                id,
                team: "t".into(),
                method: "m".into(),
                track: Track::Depth,
                received_at: "2024-05-01T00:00:00Z".into(),
            },
            Event::ScoringStarted { id },
            Event::Failed { id, reason: "boom".into() },
        ]
    }

    fn image(evs: &[Event]) -> Vec<u8> {
        let mut b = header().to_vec();
        for e in evs {
            b.extend(encode_event(e));
        }
        b
    }

    #[test]
    fn round_trips() {
        let evs = events();
        let d = decode_journal(&image(&evs)).unwrap();
        assert!(!d.torn);
        assert_eq!(d.events.iter().map(|(_, e)| e.clone()).collect::<Vec<_>>(), evs);
        assert_eq!(d.valid_len as usize, image(&evs).len());
    }

    #[test]
    fn torn_tails_are_cut_at_the_last_whole_event() {
        let evs = events();
        let full = image(&evs);
        let two = image(&evs[..2]).len();
        for cut in two..full.len() {
            let d = decode_journal(&full[..cut]).unwrap();
            assert_eq!(d.events.len(), 2, "cut {cut}");
            assert_eq!(d.valid_len as usize, two);
            assert_eq!(d.torn, cut != two);
        }
        let mut flipped = full.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert_eq!(decode_journal(&flipped).unwrap().events.len(), 2);
    }

    #[test]
    fn damage_before_the_tail_is_an_error() {
        let evs = events();
        let mut b = image(&evs);
        b[HEADER_LEN as usize + 10] ^= 0x20;
        assert!(decode_journal(&b).is_err());
        assert!(decode_journal(b"RBJRNL2\x01").is_err());
        assert!(decode_journal(b"XYZ").is_err());
        assert!(decode_journal(b"RBJ").unwrap().torn);
    }

    #[test]
    fn file_journal_truncates_and_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("journal");
        let evs = events();
        {
            let (mut j, d) = Journal::open(&path).unwrap();
            assert!(d.events.is_empty());
            for e in &evs[..2] {
                j.append(e).unwrap();
            }
        }
        // Simulate a crash halfway through the third append.
        let mut bytes = std::fs::read(&path).unwrap();
        let whole = bytes.len();
        bytes.extend(&encode_event(&evs[2])[..5]);
        std::fs::write(&path, &bytes).unwrap();
        let (mut j, d) = Journal::open(&path).unwrap();
        assert_eq!(d.events.len(), 2);
        assert_eq!(j.len() as usize, whole);
        j.append(&evs[2]).unwrap();
        drop(j);
        let (_, d) = Journal::open(&path).unwrap();
        assert_eq!(d.events.len(), 3);
        assert_eq!(d.events[2], (d.valid_len, evs[2].clone()));
    }
}
