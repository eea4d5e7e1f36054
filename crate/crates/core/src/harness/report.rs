use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corruption::CorruptionType;
use crate::error::{Error, Result};
use crate::track::{Metric, Track};

use super::table::ScoreTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub team: String,
    pub method: String,
    pub timestamp: Option<String>,
    pub headline: Option<f64>,
    pub rows: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub track: Track,
    pub metric: Metric,
    pub columns: Vec<CorruptionType>,
    pub entries: Vec<LeaderboardEntry>,
}

/// Better-first comparison of two scores; missing scores sort last.
fn compare_scores(metric: Metric, a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) if metric.higher_is_better() => y.total_cmp(&x),
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Rank score tables of one track. Ties go to the earlier timestamp (a
/// missing timestamp counts as latest), then team, method and input order.
/// With `best_per_team`, only each team's top-ranked table is kept.
pub fn rank_tables(tables: &[ScoreTable], best_per_team: bool) -> Result<Leaderboard> {
    let first = tables.first().ok_or_else(|| Error::InvalidConfig("no score tables to rank".into()))?;
    let track = first.track;
    if let Some(t) = tables.iter().find(|t| t.track != track) {
        return Err(Error::TrackMismatch { expected: track.to_string(), found: t.track.to_string() });
    }
    let metric = track.metric();
    let mut order: Vec<usize> = (0..tables.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&tables[i], &tables[j]);
        compare_scores(metric, a.headline, b.headline)
            .then_with(|| match (&a.metadata.timestamp, &b.metadata.timestamp) {
                (Some(x), Some(y)) => x.cmp(y),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            })
            .then_with(|| a.metadata.team.cmp(&b.metadata.team))
            .then_with(|| a.metadata.method.cmp(&b.metadata.method))
            .then(i.cmp(&j))
    });
    let columns = track.corruptions();
    let mut seen = HashSet::new();
    let entries = order
        .into_iter()
        .filter(|&i| !best_per_team || seen.insert(tables[i].metadata.team.clone()))
        .enumerate()
        .map(|(k, i)| {
            let t = &tables[i];
            LeaderboardEntry {
                rank: k + 1,
                team: t.metadata.team.clone(),
                method: t.metadata.method.clone(),
                timestamp: t.metadata.timestamp.clone(),
                headline: t.headline,
                rows: columns.iter().map(|c| t.row(*c).and_then(|r| r.value)).collect(),
            }
        })
        .collect();
    Ok(Leaderboard { track, metric, columns, entries })
}

impl Leaderboard {
    /// Per column (headline first, then corruptions): the best value present.
    fn best(&self) -> Vec<Option<f64>> {
        let pick = |vals: Vec<Option<f64>>| {
            vals.into_iter().flatten().min_by(|a, b| compare_scores(self.metric, Some(*a), Some(*b)))
        };
        let mut best = vec![pick(self.entries.iter().map(|e| e.headline).collect())];
        for c in 0..self.columns.len() {
            best.push(pick(self.entries.iter().map(|e| e.rows[c]).collect()));
        }
        best
    }

    fn cells(&self, e: &LeaderboardEntry) -> Vec<Option<f64>> {
        std::iter::once(e.headline).chain(e.rows.iter().copied()).collect()
    }

    /// CSV with the best value of each column suffixed by `*`.
    pub fn to_csv(&self) -> String {
        let best = self.best();
        let mut out = format!("rank,team,method,timestamp,{}", self.metric);
        for c in &self.columns {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for e in &self.entries {
            let _ = write!(
                out,
                "{},{},{},{}",
                e.rank,
                csv_field(&e.team),
                csv_field(&e.method),
                csv_field(e.timestamp.as_deref().unwrap_or(""))
            );
            for (v, b) in self.cells(e).into_iter().zip(&best) {
                out.push(',');
                if let Some(v) = v {
                    let _ = write!(out, "{v:.4}{}", if Some(v) == *b { "*" } else { "" });
                }
            }
            out.push('\n');
        }
        out
    }

    /// Markdown table with the best value of each column in bold.
    pub fn to_markdown(&self) -> String {
        let best = self.best();
        let mut out = format!("| Rank | Team | Method | {} |", self.metric);
        for c in &self.columns {
            let _ = write!(out, " {c} |");
        }
        out.push_str("\n|---|---|---|---|");
        out.push_str(&"---|".repeat(self.columns.len()));
        out.push('\n');
        for e in &self.entries {
            let _ = write!(out, "| {} | {} | {} |", e.rank, md_field(&e.team), md_field(&e.method));
            for (v, b) in self.cells(e).into_iter().zip(&best) {
                match v {
                    Some(v) if Some(v) == *b => {
                        let _ = write!(out, " **{v:.4}** |");
                    }
                    Some(v) => {
                        let _ = write!(out, " {v:.4} |");
                    }
                    None => out.push_str(" – |"),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn md_field(s: &str) -> String {
    s.replace('|', "\\|").replace(['\n', '\r'], " ")
}
