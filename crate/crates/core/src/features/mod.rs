//! Per-(user, match) history features: sessions, idle gaps, and cumulative
//! and mean statistics over strictly earlier matches.

mod binning;
mod session;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::fmt_opt;
use crate::ingestion::{MatchRecord, PlayerMatchRecord, TelemetryTables, Tier};

pub use binning::{percentile_bins, BinEdges, Binning, BinningSpec};
pub use session::{sessionize, MatchSpan, SessionAssignment, DEFAULT_SESSION_GAP_SECS};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("invalid binning spec: {0}")]
    InvalidBinning(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// How a feature column is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Binary,
    Count,
    Continuous,
    Ordinal,
}

/// One match of one user, joined with its match metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryMatch {
    pub match_id: String,
    pub start: i64,
    pub duration: i64,
    pub kills: u32,
    pub deaths: u32,
    pub assists: u32,
    pub gold_earned: u64,
    pub gold_spent: u64,
    pub champ_level: u8,
    pub won: bool,
    pub tier: Option<Tier>,
}

impl HistoryMatch {
    pub fn join(pm: &PlayerMatchRecord, m: &MatchRecord) -> Self {
        Self {
            match_id: pm.match_id.clone(),
            start: m.start_time,
            duration: m.duration,
            kills: pm.kills,
            deaths: pm.deaths,
            assists: pm.assists,
            gold_earned: pm.gold_earned,
            gold_spent: pm.gold_spent,
            champ_level: pm.champ_level,
            won: pm.team == m.winning_team,
            tier: pm.highest_prev_season_tier,
        }
    }

    /// (kills + assists) / max(deaths, 1).
    pub fn kda(&self) -> f64 {
        f64::from(self.kills + self.assists) / f64::from(self.deaths.max(1))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CumStats {
    pub kills: f64,
    pub deaths: f64,
    pub assists: f64,
    pub gold_earned: f64,
    pub gold_spent: f64,
    pub match_duration: f64,
    pub wins: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStats {
    pub kills: f64,
    pub deaths: f64,
    pub assists: f64,
    pub kda: f64,
    pub gold_earned: f64,
    pub gold_spent: f64,
    pub match_duration: f64,
    pub wins: f64,
    pub champ_level: f64,
}

/// Totals and means over a set of earlier matches. Means are 0 when the set
/// is empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HistoryStats {
    pub matches: u32,
    pub cum: CumStats,
    pub mean: MeanStats,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    n: u32,
    cum: CumStats,
    kda: f64,
    champ_level: f64,
}

impl Accumulator {
    fn add(&mut self, m: &HistoryMatch) {
        self.n += 1;
        self.cum.kills += f64::from(m.kills);
        self.cum.deaths += f64::from(m.deaths);
        self.cum.assists += f64::from(m.assists);
        self.cum.gold_earned += m.gold_earned as f64;
        self.cum.gold_spent += m.gold_spent as f64;
        self.cum.match_duration += m.duration as f64;
        self.cum.wins += f64::from(u8::from(m.won));
        self.kda += m.kda();
        self.champ_level += f64::from(m.champ_level);
    }

    fn snapshot(&self) -> HistoryStats {
        let mean = if self.n == 0 {
            MeanStats::default()
        } else {
            let n = f64::from(self.n);
            let c = &self.cum;
            MeanStats {
                kills: c.kills / n,
                deaths: c.deaths / n,
                assists: c.assists / n,
                kda: self.kda / n,
                gold_earned: c.gold_earned / n,
                gold_spent: c.gold_spent / n,
                match_duration: c.match_duration / n,
                wins: c.wins / n,
                champ_level: self.champ_level / n,
            }
        };
        HistoryStats {
            matches: self.n,
            cum: self.cum,
            mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerDerivedFeatures {
    pub user_id: String,
    pub match_id: String,
    pub time_since_last_match: Option<i64>,
    pub session_number: u32,
    pub match_index_in_session: u32,
    pub matches_played_so_far: u32,
    pub history: HistoryStats,
    pub session: HistoryStats,
    pub highest_prev_season_tier: Option<u8>,
}

const STAT_NAMES_CUM: [&str; 7] = [
    "Kills",
    "Deaths",
    "Assists",
    "GoldEarned",
    "GoldSpent",
    "MatchDuration",
    "Wins",
];
const STAT_NAMES_MEAN: [&str; 9] = [
    "Kills",
    "Deaths",
    "Assists",
    "Kda",
    "GoldEarned",
    "GoldSpent",
    "MatchDuration",
    "Wins",
    "ChampLevel",
];

fn cum_values(c: &CumStats) -> [f64; 7] {
    [
        c.kills,
        c.deaths,
        c.assists,
        c.gold_earned,
        c.gold_spent,
        c.match_duration,
        c.wins,
    ]
}

fn mean_values(m: &MeanStats) -> [f64; 9] {
    [
        m.kills,
        m.deaths,
        m.assists,
        m.kda,
        m.gold_earned,
        m.gold_spent,
        m.match_duration,
        m.wins,
        m.champ_level,
    ]
}

/// Ordered derived-feature columns with their kinds.
pub fn feature_schema() -> Vec<(String, FeatureKind)> {
    let mut cols = vec![
        ("timeSinceLastMatch".to_string(), FeatureKind::Continuous),
        ("sessionNumber".to_string(), FeatureKind::Count),
        ("matchIndexInSession".to_string(), FeatureKind::Count),
        ("matchesPlayedSoFar".to_string(), FeatureKind::Count),
    ];
    for prefix in ["", "session"] {
        let cum = if prefix.is_empty() {
            "cum"
        } else {
            "sessionCum"
        };
        let mean = if prefix.is_empty() {
            "mean"
        } else {
            "sessionMean"
        };
        cols.extend(
            STAT_NAMES_CUM
                .iter()
                .map(|s| (format!("{cum}{s}AtStart"), FeatureKind::Count)),
        );
        cols.extend(
            STAT_NAMES_MEAN
                .iter()
                .map(|s| (format!("{mean}{s}AtStart"), FeatureKind::Continuous)),
        );
    }
    cols.push(("highestPrevSeasonTier".to_string(), FeatureKind::Ordinal));
    cols
}

impl PlayerDerivedFeatures {
    /// Values in `feature_schema()` order; `None` marks a missing value.
    pub fn values(&self) -> Vec<Option<f64>> {
        let mut v = Vec::with_capacity(37);
        v.push(self.time_since_last_match.map(|t| t as f64));
        v.push(Some(f64::from(self.session_number)));
        v.push(Some(f64::from(self.match_index_in_session)));
        v.push(Some(f64::from(self.matches_played_so_far)));
        for stats in [&self.history, &self.session] {
            v.extend(cum_values(&stats.cum).map(Some));
            v.extend(mean_values(&stats.mean).map(Some));
        }
        v.push(self.highest_prev_season_tier.map(f64::from));
        v
    }

    pub fn value(&self, feature: &str) -> Option<Option<f64>> {
        let idx = feature_schema().iter().position(|(n, _)| n == feature)?;
        Some(self.values()[idx])
    }
}

/// Derived features for one user's chronologically sorted matches. Every
/// `*AtStart` statistic uses strictly earlier matches only.
pub fn rolling_stats(
    user_id: &str,
    history: &[HistoryMatch],
    gap_threshold: i64,
) -> Vec<PlayerDerivedFeatures> {
    let spans: Vec<MatchSpan> = history
        .iter()
        .map(|m| MatchSpan {
            start: m.start,
            duration: m.duration,
        })
        .collect();
    let sessions = sessionize(&spans, gap_threshold);
    let mut overall = Accumulator::default();
    let mut in_session = Accumulator::default();
    let mut out = Vec::with_capacity(history.len());
    for (m, s) in history.iter().zip(sessions) {
        if s.match_index_in_session == 1 {
            in_session = Accumulator::default();
        }
        out.push(PlayerDerivedFeatures {
            user_id: user_id.to_string(),
            match_id: m.match_id.clone(),
            time_since_last_match: s.time_since_last_match,
            session_number: s.session_number,
            match_index_in_session: s.match_index_in_session,
            matches_played_so_far: overall.n,
            history: overall.snapshot(),
            session: in_session.snapshot(),
            highest_prev_season_tier: m.tier.map(Tier::ordinal),
        });
        overall.add(m);
        in_session.add(m);
    }
    out
}

/// Derived features for every player row, grouped by user (ascending) and
/// ordered by match start within each user. Rows whose match is unknown are
/// skipped.
pub fn compute_features(
    tables: &TelemetryTables,
    gap_threshold: i64,
) -> Vec<PlayerDerivedFeatures> {
    let by_id = crate::ingestion::index_matches(&tables.matches);
    let mut per_user: BTreeMap<&str, Vec<HistoryMatch>> = BTreeMap::new();
    for pm in &tables.player_matches {
        if let Some(m) = by_id.get(pm.match_id.as_str()) {
            per_user
                .entry(pm.user_id.as_str())
                .or_default()
                .push(HistoryMatch::join(pm, m));
        }
    }
    let users: Vec<(&str, Vec<HistoryMatch>)> = per_user.into_iter().collect();
    users
        .into_par_iter()
        .map(|(user, mut hist)| {
            hist.sort_by(|a, b| {
                a.start
                    .cmp(&b.start)
                    .then_with(|| a.match_id.cmp(&b.match_id))
            });
            rolling_stats(user, &hist, gap_threshold)
        })
        .flatten_iter()
        .collect()
}

/// Writes `features.csv`: `user_id,match_id` then `feature_schema()` columns.
pub fn write_features_csv<W: Write>(
    features: &[PlayerDerivedFeatures],
    w: W,
) -> Result<(), FeatureError> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["user_id".to_string(), "match_id".to_string()];
    header.extend(feature_schema().into_iter().map(|(n, _)| n));
    wtr.write_record(&header)?;
    for f in features {
        let mut row = vec![f.user_id.clone(), f.match_id.clone()];
        row.extend(f.values().into_iter().map(fmt_opt));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
