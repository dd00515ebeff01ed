use std::collections::{BTreeMap, HashMap, HashSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::ingestion::{
    ChampionId, MatchRecord, PatchPair, PatchTimeline, PatchVersion, PlayerMatchRecord, Team,
};
use crate::tree::{estimate_effect, EffectEstimate};

use super::AnalysisError;

/// Per-player-match outcome measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    Kills,
    Deaths,
    Assists,
    GoldEarned,
    GoldSpent,
    Win,
}

impl Outcome {
    pub fn value(self, pm: &PlayerMatchRecord, m: &MatchRecord) -> f64 {
        match self {
            Outcome::Kills => f64::from(pm.kills),
            Outcome::Deaths => f64::from(pm.deaths),
            Outcome::Assists => f64::from(pm.assists),
            Outcome::GoldEarned => pm.gold_earned as f64,
            Outcome::GoldSpent => pm.gold_spent as f64,
            Outcome::Win => f64::from(u8::from(pm.team == m.winning_team)),
        }
    }
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown outcome `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteCell {
    pub pair: PatchPair,
    pub n_before: usize,
    pub n_after: usize,
    /// `None` when an arm is too small for inference.
    pub estimate: Option<EffectEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteSeries {
    pub outcome: Outcome,
    pub cells: Vec<AteCell>,
}

/// Difference in mean outcome between consecutive patches over all
/// player-match rows.
pub fn ate_series(
    matches: &[MatchRecord],
    player_matches: &[PlayerMatchRecord],
    timeline: &PatchTimeline,
    outcome: Outcome,
) -> Result<AteSeries, AnalysisError> {
    if timeline.len() < 2 {
        return Err(AnalysisError::TooFewPatches(timeline.len()));
    }
    let by_id = crate::ingestion::index_matches(matches);
    let mut per_patch: BTreeMap<PatchVersion, Vec<f64>> = BTreeMap::new();
    for pm in player_matches {
        if let Some(m) = by_id.get(pm.match_id.as_str()) {
            per_patch
                .entry(m.patch)
                .or_default()
                .push(outcome.value(pm, m));
        }
    }
    let empty = Vec::new();
    let cells = timeline
        .pairs()
        .into_iter()
        .map(|pair| {
            let before = per_patch.get(&pair.control).unwrap_or(&empty);
            let after = per_patch.get(&pair.treated).unwrap_or(&empty);
            AteCell {
                pair,
                n_before: before.len(),
                n_after: after.len(),
                estimate: estimate_effect(after, before).ok(),
            }
        })
        .collect();
    Ok(AteSeries { outcome, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateCell {
    pub patch: PatchVersion,
    pub wins: usize,
    pub games: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateSeries {
    pub champion: ChampionId,
    pub cells: Vec<WinRateCell>,
}

impl WinRateSeries {
    pub fn rate_at(&self, patch: PatchVersion) -> Option<f64> {
        self.cells.iter().find(|c| c.patch == patch).map(|c| c.rate)
    }
}

/// Share of team-presence rows (one per team fielding `champion`) that won,
/// per patch. A mirror match counts one win and one loss.
pub fn win_rate_series(
    matches: &[MatchRecord],
    player_matches: &[PlayerMatchRecord],
    champion: &ChampionId,
) -> WinRateSeries {
    let by_id = crate::ingestion::index_matches(matches);
    let mut presence: HashSet<(&str, Team)> = HashSet::new();
    for pm in player_matches.iter().filter(|p| p.champion == *champion) {
        presence.insert((pm.match_id.as_str(), pm.team));
    }
    let mut tally: BTreeMap<PatchVersion, (usize, usize)> = BTreeMap::new();
    for (match_id, team) in presence {
        if let Some(m) = by_id.get(match_id) {
            let cell = tally.entry(m.patch).or_default();
            cell.1 += 1;
            cell.0 += usize::from(m.winning_team == team);
        }
    }
    let cells = tally
        .into_iter()
        .filter(|(_, (_, games))| *games > 0)
        .map(|(patch, (wins, games))| WinRateCell {
            patch,
            wins,
            games,
            rate: wins as f64 / games as f64,
        })
        .collect();
    WinRateSeries {
        champion: champion.clone(),
        cells,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Pearson correlation with a two-sided p-value from `t = r sqrt((n-2)/(1-r^2))`.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Correlation, AnalysisError> {
    let n = a.len().min(b.len());
    if n < 3 {
        return Err(AnalysisError::TooFewPoints(n));
    }
    let (a, b) = (&a[..n], &b[..n]);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(AnalysisError::UndefinedCorrelation);
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() >= 1.0 || n == 2 {
        0.0
    } else {
        let t = r.abs() * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.sf(t)).min(1.0)
    };
    Ok(Correlation { r, p_value, n })
}

/// Correlation of two win-rate series over their common patches.
pub fn correlate(a: &WinRateSeries, b: &WinRateSeries) -> Result<Correlation, AnalysisError> {
    let rates_b: HashMap<PatchVersion, f64> = b.cells.iter().map(|c| (c.patch, c.rate)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .cells
        .iter()
        .filter_map(|c| rates_b.get(&c.patch).map(|r| (c.rate, *r)))
        .unzip();
    pearson(&xs, &ys)
}
