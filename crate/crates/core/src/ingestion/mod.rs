//! Raw match telemetry: records, loading with reject tracking, the patch
//! timeline and champion metadata.

mod catalog;
mod load;
mod patch;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use catalog::{load_catalog, read_catalog, ChampionCatalog, ChampionInfo, ChampionType};
pub(crate) use load::index_matches;
pub use load::{
    load_matches, read_tables, LoadOptions, Reject, RejectReport, TelemetryTables, MATCH_COLUMNS,
    PLAYER_COLUMNS,
};
pub use patch::{build_patch_timeline, PatchPair, PatchTimeline, PatchVersion, TimelineEntry};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("invalid patch version `{0}` (expected X.Y)")]
    InvalidPatch(String),
    #[error("reject rate {rate:.4} exceeds threshold {threshold:.4} ({rejected} of {total} rows)")]
    RejectRateExceeded {
        rate: f64,
        threshold: f64,
        rejected: usize,
        total: usize,
        report: RejectReport,
    },
    #[error("champion catalog line {line}: {reason}")]
    Catalog { line: u64, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueType {
    Ranked,
    Normal,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapMode {
    FiveVFive,
    ThreeVThree,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Blue,
    Red,
}

impl Team {
    pub fn as_str(self) -> &'static str {
        match self {
            Team::Blue => "blue",
            Team::Red => "red",
        }
    }
}

impl FromStr for Team {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "blue" => Ok(Team::Blue),
            "red" => Ok(Team::Red),
            _ => Err(()),
        }
    }
}

/// Highest tier reached in the previous ranked season. `Unranked` covers
/// players with no competitive history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Unranked,
    Bronze,
    Silver,
    Gold,
    Platinum,
    Diamond,
    Master,
    Challenger,
}

impl Tier {
    const ALL: [Tier; 8] = [
        Tier::Unranked,
        Tier::Bronze,
        Tier::Silver,
        Tier::Gold,
        Tier::Platinum,
        Tier::Diamond,
        Tier::Master,
        Tier::Challenger,
    ];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Unranked => "unranked",
            Tier::Bronze => "bronze",
            Tier::Silver => "silver",
            Tier::Gold => "gold",
            Tier::Platinum => "platinum",
            Tier::Diamond => "diamond",
            Tier::Master => "master",
            Tier::Challenger => "challenger",
        }
    }
}

impl FromStr for Tier {
    type Err = ();

    /// Accepts tier names in any case or the ordinal 0-7.
    fn from_str(s: &str) -> Result<Self, ()> {
        if let Ok(n) = s.parse::<usize>() {
            return Tier::ALL.get(n).copied().ok_or(());
        }
        let lower = s.to_ascii_lowercase();
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == lower)
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChampionId(pub String);

impl ChampionId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChampionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    /// Unix seconds, UTC.
    pub start_time: i64,
    /// Seconds, always positive.
    pub duration: i64,
    pub patch: PatchVersion,
    pub queue_type: QueueType,
    /// Raw queue tag when it carried more than the queue class, e.g. `ranked_solo`.
    pub queue_subtype: Option<String>,
    pub map_mode: MapMode,
    pub season_id: i64,
    pub winning_team: Team,
}

impl MatchRecord {
    pub fn end_time(&self) -> i64 {
        self.start_time + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerMatchRecord {
    pub match_id: String,
    pub user_id: String,
    pub team: Team,
    pub champion: ChampionId,
    pub role: String,
    pub lane: String,
    pub kills: u32,
    pub deaths: u32,
    pub assists: u32,
    pub gold_earned: u64,
    pub gold_spent: u64,
    pub champ_level: u8,
    pub highest_prev_season_tier: Option<Tier>,
}

/// Keeps ranked 5v5 matches only. Pure; the input is not touched.
pub fn filter_competitive(matches: &[MatchRecord]) -> Vec<MatchRecord> {
    matches
        .iter()
        .filter(|m| m.queue_type == QueueType::Ranked && m.map_mode == MapMode::FiveVFive)
        .cloned()
        .collect()
}

/// The `k` most picked champions, ties broken by champion name ascending
/// (champion id when the catalog has no entry).
pub fn top_champions(
    player_matches: &[PlayerMatchRecord],
    catalog: &ChampionCatalog,
    k: usize,
) -> Vec<ChampionId> {
    let mut picks: HashMap<&ChampionId, usize> = HashMap::new();
    for pm in player_matches {
        *picks.entry(&pm.champion).or_default() += 1;
    }
    if k > picks.len() {
        log::warn!(
            "requested top {k} champions but only {} distinct champions were played",
            picks.len()
        );
    }
    let mut ranked: Vec<(&ChampionId, usize)> = picks.into_iter().collect();
    ranked.sort_by(|(a, na), (b, nb)| {
        nb.cmp(na)
            .then_with(|| catalog.display_name(a).cmp(catalog.display_name(b)))
            .then_with(|| a.cmp(b))
    });
    ranked.into_iter().take(k).map(|(c, _)| c.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn match_rec(id: &str, queue: QueueType, map: MapMode) -> MatchRecord {
        MatchRecord {
            match_id: id.into(),
            start_time: 0,
            duration: 1800,
            patch: PatchVersion::new(4, 6),
            queue_type: queue,
            queue_subtype: None,
            map_mode: map,
            season_id: 4,
            winning_team: Team::Blue,
        }
    }

    fn pick(champion: &str, user: &str) -> PlayerMatchRecord {
        PlayerMatchRecord {
            match_id: "m".into(),
            user_id: user.into(),
            team: Team::Blue,
            champion: ChampionId::new(champion),
            role: String::new(),
            lane: String::new(),
            kills: 0,
            deaths: 0,
            assists: 0,
            gold_earned: 0,
            gold_spent: 0,
            champ_level: 1,
            highest_prev_season_tier: None,
        }
    }

    fn picks(counts: &[(&str, usize)]) -> Vec<PlayerMatchRecord> {
        let mut out = Vec::new();
        for (c, n) in counts {
            for i in 0..*n {
                out.push(pick(c, &format!("{c}{i}")));
            }
        }
        out
    }

    #[test]
    fn competitive_filter() {
        let ms = vec![
            match_rec("a", QueueType::Ranked, MapMode::FiveVFive),
            match_rec("b", QueueType::Normal, MapMode::FiveVFive),
            match_rec("c", QueueType::Ranked, MapMode::ThreeVThree),
        ];
        let out = filter_competitive(&ms);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].match_id, "a");
        assert_eq!(ms.len(), 3);
        assert_eq!(filter_competitive(&out), out);
        assert!(filter_competitive(&[]).is_empty());
    }

    #[test]
    fn top_k_by_count_then_name() {
        let cat = ChampionCatalog::default();
        let pm = picks(&[("C", 1), ("A", 5), ("B", 3)]);
        assert_eq!(
            top_champions(&pm, &cat, 2),
            vec![ChampionId::new("A"), ChampionId::new("B")]
        );
        let pm = picks(&[("B", 3), ("A", 3)]);
        assert_eq!(top_champions(&pm, &cat, 1), vec![ChampionId::new("A")]);
        assert_eq!(top_champions(&pm, &cat, 10).len(), 2);
    }

    #[test]
    fn tie_break_uses_catalog_name() {
        let cat =
            read_catalog("champion_id,name,champion_type\n1,Zed,slayer\n2,Ahri,mage\n".as_bytes())
                .unwrap();
        let pm = picks(&[("1", 2), ("2", 2)]);
        assert_eq!(top_champions(&pm, &cat, 1), vec![ChampionId::new("2")]);
    }

    #[test]
    fn tier_parsing() {
        assert_eq!("Gold".parse::<Tier>().unwrap().ordinal(), 3);
        assert_eq!("7".parse::<Tier>().unwrap(), Tier::Challenger);
        assert!("wood".parse::<Tier>().is_err());
    }
}
