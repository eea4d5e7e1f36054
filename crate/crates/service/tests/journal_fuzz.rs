#[path = "../../core/tests/support/fuzz.rs"]
mod fuzz;

use robobench_service::journal::{encode_event, Event, JOURNAL_MAGIC, JOURNAL_VERSION};
use robobench_service::{decode_journal, Index};

pub fn journal_corpus() -> Vec<Vec<u8>> {
    let id = uuid::Uuid::from_u128(0x1234);
    let events = [
        Event::Submitted {
            id,
            team: "t".into(),
            method: "m".into(),
            track: robobench_core::Track::Depth,
            received_at: "2024-05-01T00:00:00.000000Z".into(),
        },
        Event::ScoringStarted { id },
        Event::Failed { id, reason: "bad payload".into() },
    ];
    let mut image = JOURNAL_MAGIC.to_vec();
    image.push(JOURNAL_VERSION);
    let mut out = vec![image.clone()];
    for ev in &events {
        image.extend(encode_event(ev));
        out.push(image.clone());
    }
    out
}

/// Decode, then replay into an index; both steps must fail cleanly.
pub fn read_journal(bytes: &[u8]) -> bool {
    let Ok(decoded) = decode_journal(bytes) else { return false };
    let mut index = Index::default();
    decoded.events.iter().all(|(_, ev)| index.apply(ev).is_ok())
}

#[test]
fn journal_reader_survives_mutation() {
    let corpus = journal_corpus();
    let stats = fuzz::run("journal", &corpus, fuzz::budget(1.0), 0x10A4, read_journal);
    assert!(stats.accepted >= corpus.len() as u64, "{stats:?}");
}

#[test]
fn corpus_replays_cleanly() {
    assert!(journal_corpus().iter().all(|j| read_journal(j)));
}
