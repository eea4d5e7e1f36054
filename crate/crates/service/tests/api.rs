use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::Value;

use robobench_bench::Synthetic;
use robobench_core::harness::{evaluate_submission, rank_tables, EvalOptions, ScoreTable};
use robobench_core::io::submission::{parse_submission_str, PathPolicy};
use robobench_core::params::ParamsTable;
use robobench_core::Track;
use robobench_service::journal::Event;
use robobench_service::{decode_journal, spawn, ServerHandle, ServiceConfig, TrackConfig};

struct Fixture {
    _dir: tempfile::TempDir,
    data_dir: std::path::PathBuf,
    sets: BTreeMap<Track, Synthetic>,
}

fn fixture(tracks: &[Track]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let sets = tracks
        .iter()
        .map(|&t| (t, robobench_bench::build(&dir.path().join(t.to_string()), t, 8, 11).unwrap()))
        .collect();
    let data_dir = dir.path().join("state");
    Fixture { _dir: dir, data_dir, sets }
}

impl Fixture {
    fn config(&self) -> ServiceConfig {
        ServiceConfig {
            bind: "127.0.0.1:0".parse().unwrap(),
            data_dir: self.data_dir.clone(),
            daily_limit: 5,
            score_delay_ms: 0,
            snapshot_every: 4,
            max_upload_bytes: 8 << 20,
            seed: 0,
            params: None,
            tokens: BTreeMap::new(),
            tracks: self
                .sets
                .iter()
                .map(|(&t, s)| (t, TrackConfig { manifest: s.manifest_path.clone(), median_scaling: false, micro_average: false }))
                .collect(),
        }
    }

    fn payload(&self, track: Track, team: &str, noise: f64, seed: u64) -> String {
        robobench_bench::submission(&self.sets[&track].manifest, team, "m", None, noise, seed).unwrap()
    }
}

fn url(h: &ServerHandle, path: &str) -> String {
    format!("http://{}/api/v1{path}", h.addr)
}

fn post(h: &ServerHandle, track: &str, body: &str) -> (StatusCode, Value) {
    let r = Client::new().post(url(h, &format!("/tracks/{track}/submissions"))).body(body.to_string()).send().unwrap();
    let status = r.status();
    (status, r.json().unwrap_or(Value::Null))
}

fn get(h: &ServerHandle, path: &str) -> (StatusCode, Value) {
    let r = Client::new().get(url(h, path)).send().unwrap();
    let status = r.status();
    (status, r.json().unwrap_or(Value::Null))
}

fn wait_terminal(h: &ServerHandle, id: &str) -> Value {
    let start = Instant::now();
    loop {
        let (s, rec) = get(h, &format!("/submissions/{id}"));
        assert_eq!(s, StatusCode::OK);
        if rec["status"] == "scored" || rec["status"] == "failed" {
            return rec;
        }
        assert!(start.elapsed() < Duration::from_secs(60), "submission {id} stuck in {}", rec["status"]);
        std::thread::sleep(Duration::from_millis(20));
    }
}

fn offline(fx: &Fixture, track: Track, payload: &str) -> ScoreTable {
    let sub = parse_submission_str(payload, track, PathPolicy::InlineOnly).unwrap();
    let opts = EvalOptions {
        depth: Default::default(),
        seed: 0,
        params_hash: ParamsTable::canonical().hash().to_string(),
        timestamp: None,
        jobs: None,
    };
    evaluate_submission(&fx.sets[&track].manifest, &sub, &opts).unwrap()
}

#[test]
fn submission_is_scored_like_offline_eval() {
    let fx = fixture(&[Track::Depth, Track::BevDetection]);
    let h = spawn(fx.config()).unwrap();
    assert_eq!(get(&h, "/healthz").0, StatusCode::OK);
    for track in [Track::Depth, Track::BevDetection] {
        let payload = fx.payload(track, "alpha", 0.3, 5);
        let (s, body) = post(&h, &track.to_string(), &payload);
        assert_eq!(s, StatusCode::ACCEPTED, "{body}");
        assert_eq!(body["status"], "queued");
        let rec = wait_terminal(&h, body["submission_id"].as_str().unwrap());
        assert_eq!(rec["status"], "scored", "{rec}");
        assert_eq!(rec["team"], "alpha");
        assert!(rec["failure_reason"].is_null());
        let served: ScoreTable = serde_json::from_value(rec["score_table"].clone()).unwrap();
        let expected = offline(&fx, track, &payload);
        assert_eq!(serde_json::to_string(&served).unwrap(), serde_json::to_string(&expected).unwrap());
    }
}

#[test]
fn bad_requests_are_rejected_with_diagnostics() {
    let fx = fixture(&[Track::Depth]);
    let h = spawn(fx.config()).unwrap();
    let good = fx.payload(Track::Depth, "alpha", 0.1, 1);

    let mut lines: Vec<&str> = good.lines().collect();
    // Records are numbered by line, the header being line 1.
    lines[2] = "{not json";
    let (s, body) = post(&h, "depth", &lines.join("\n"));
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["record"], 3, "{body}");
    assert!(body["error"].as_str().unwrap().contains("record 3"));

    // Well-formed but missing a sample the manifest needs.
    let short: Vec<&str> = good.lines().take(3).collect();
    let (s, body) = post(&h, "depth", &short.join("\n"));
    assert_eq!(s, StatusCode::BAD_REQUEST, "{body}");

    assert_eq!(post(&h, "bev_detection", &good).0, StatusCode::NOT_FOUND);
    assert_eq!(post(&h, "lane_keeping", &good).0, StatusCode::NOT_FOUND);
    assert_eq!(get(&h, "/tracks/occupancy/leaderboard").0, StatusCode::NOT_FOUND);
    assert_eq!(get(&h, &format!("/submissions/{}", uuid::Uuid::new_v4())).0, StatusCode::NOT_FOUND);
    assert_eq!(get(&h, "/submissions/not-a-uuid").0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&h, "/tracks/depth/leaderboard?format=xml").0, StatusCode::BAD_REQUEST);
    assert!(h.service.index().is_empty());
}

#[test]
fn sixth_submission_of_the_day_is_rate_limited() {
    let fx = fixture(&[Track::Depth]);
    let h = spawn(fx.config()).unwrap();
    for i in 0..5 {
        assert_eq!(post(&h, "depth", &fx.payload(Track::Depth, "alpha", 0.2, i)).0, StatusCode::ACCEPTED);
    }
    let (s, body) = post(&h, "depth", &fx.payload(Track::Depth, "alpha", 0.2, 9));
    assert_eq!(s, StatusCode::TOO_MANY_REQUESTS, "{body}");
    // Other teams are unaffected.
    assert_eq!(post(&h, "depth", &fx.payload(Track::Depth, "beta", 0.2, 9)).0, StatusCode::ACCEPTED);
}

#[test]
fn tokens_are_checked_when_configured() {
    let fx = fixture(&[Track::Depth]);
    let mut cfg = fx.config();
    cfg.tokens.insert("alpha".into(), "s3cret".into());
    let h = spawn(cfg).unwrap();
    let payload = fx.payload(Track::Depth, "alpha", 0.2, 1);
    let send = |auth: Option<&str>| {
        let mut rq = Client::new().post(url(&h, "/tracks/depth/submissions")).body(payload.clone());
        if let Some(a) = auth {
            rq = rq.header("Authorization", a);
        }
        rq.send().unwrap().status()
    };
    assert_eq!(send(None), StatusCode::UNAUTHORIZED);
    assert_eq!(send(Some("Bearer wrong")), StatusCode::UNAUTHORIZED);
    assert_eq!(send(Some("Bearer s3cret")), StatusCode::ACCEPTED);
    // Teams without a token cannot submit at all.
    assert_eq!(post(&h, "depth", &fx.payload(Track::Depth, "beta", 0.2, 1)).0, StatusCode::UNAUTHORIZED);
}

#[test]
fn leaderboard_keeps_each_teams_best() {
    let fx = fixture(&[Track::Depth]);
    let h = spawn(fx.config()).unwrap();
    let (s, empty) = get(&h, "/tracks/depth/leaderboard");
    assert_eq!(s, StatusCode::OK);
    assert_eq!(empty["entries"], Value::Array(vec![]));

    let mut ids = Vec::new();
    for (team, noise) in [("alpha", 0.5), ("alpha", 0.05), ("alpha", 0.3), ("beta", 0.2)] {
        ids.push(post(&h, "depth", &fx.payload(Track::Depth, team, noise, 3)).1["submission_id"].as_str().unwrap().to_string());
    }
    let tables: Vec<ScoreTable> = ids
        .iter()
        .map(|id| serde_json::from_value(wait_terminal(&h, id)["score_table"].clone()).unwrap())
        .collect();
    let (_, lb) = get(&h, "/tracks/depth/leaderboard");
    let entries = lb["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["team"], "alpha");
    assert_eq!(entries[0]["headline"].as_f64(), tables[1].headline);
    assert_eq!(entries[1]["team"], "beta");

    let csv = Client::new().get(url(&h, "/tracks/depth/leaderboard?format=csv")).send().unwrap().text().unwrap();
    assert_eq!(csv.lines().count(), 3);
    let md = Client::new().get(url(&h, "/tracks/depth/leaderboard?format=markdown")).send().unwrap().text().unwrap();
    assert!(md.contains("| 1 | alpha"), "{md}");
}

fn scored_counts(data_dir: &Path) -> BTreeMap<uuid::Uuid, usize> {
    let decoded = decode_journal(&std::fs::read(data_dir.join("journal")).unwrap()).unwrap();
    let mut out = BTreeMap::new();
    for (_, ev) in decoded.events {
        let n = out.entry(ev.id()).or_insert(0);
        if matches!(ev, Event::Scored { .. } | Event::Failed { .. }) {
            *n += 1;
        }
    }
    out
}

#[test]
fn restart_resumes_pending_work_exactly_once() {
    let fx = fixture(&[Track::Depth]);
    let mut cfg = fx.config();
    cfg.score_delay_ms = 300;
    let h = spawn(cfg.clone()).unwrap();
    let payloads: Vec<String> = (0..4).map(|i| fx.payload(Track::Depth, &format!("team{i}"), 0.1 * i as f64, i)).collect();
    let ids: Vec<String> =
        payloads.iter().map(|p| post(&h, "depth", p).1["submission_id"].as_str().unwrap().to_string()).collect();
    std::thread::sleep(Duration::from_millis(100));
    h.stop().unwrap();
    let before = scored_counts(&fx.data_dir);
    assert!(before.values().filter(|&&n| n == 1).count() < 4, "everything finished before the restart");

    // A half-written event at the tail, as a crash mid-append would leave.
    use std::io::Write;
    std::fs::OpenOptions::new().append(true).open(fx.data_dir.join("journal")).unwrap().write_all(&[40, 0, 0, 0, 1, 2]).unwrap();

    cfg.score_delay_ms = 0;
    let h = spawn(cfg).unwrap();
    for (id, payload) in ids.iter().zip(&payloads) {
        let rec = wait_terminal(&h, id);
        assert_eq!(rec["status"], "scored");
        let served: ScoreTable = serde_json::from_value(rec["score_table"].clone()).unwrap();
        assert_eq!(served, offline(&fx, Track::Depth, payload));
    }
    let tables = h.service.index().scored_tables(Track::Depth);
    assert_eq!(h.service.leaderboard(Track::Depth).unwrap(), rank_tables(&tables, true).unwrap());
    h.stop().unwrap();
    let after = scored_counts(&fx.data_dir);
    assert_eq!(after.len(), 4);
    assert!(after.values().all(|&n| n == 1), "{after:?}");
}

#[test]
fn snapshot_and_journal_agree_after_restart() {
    let fx = fixture(&[Track::Depth]);
    let cfg = fx.config();
    let h = spawn(cfg.clone()).unwrap();
    let ids: Vec<String> = (0..3)
        .map(|i| post(&h, "depth", &fx.payload(Track::Depth, "alpha", 0.1, i)).1["submission_id"].as_str().unwrap().to_string())
        .collect();
    for id in &ids {
        wait_terminal(&h, id);
    }
    let live = h.service.index();
    h.stop().unwrap();
    assert!(fx.data_dir.join("snapshot.json").exists());
    let h = spawn(cfg.clone()).unwrap();
    assert_eq!(*h.service.index(), *live);
    h.stop().unwrap();
    // Without the snapshot the journal alone rebuilds the same state.
    std::fs::remove_file(fx.data_dir.join("snapshot.json")).unwrap();
    let h = spawn(cfg).unwrap();
    assert_eq!(*h.service.index(), *live);
}
