use std::collections::{BTreeMap, HashMap};

use crate::features::{feature_schema, PlayerDerivedFeatures};
use crate::ingestion::{
    ChampionCatalog, ChampionId, PatchPair, PatchTimeline, PatchVersion, TelemetryTables,
};

use super::{FeatureSpec, FrameError, OutcomeKind, TreatmentFrame};

/// Stand-in for a missing `timeSinceLastMatch` (first match of a user); lies
/// below every real gap.
pub const MISSING_GAP: f64 = -1.0;

/// One player-match joined with its derived features.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub match_id: String,
    pub user_id: String,
    pub patch: PatchVersion,
    pub start: i64,
    pub kills: u32,
    pub x: Vec<f64>,
}

/// Player rows grouped by champion, each group in match-start order.
#[derive(Debug, Clone, Default)]
pub struct PlayerPanel {
    schema: Vec<FeatureSpec>,
    by_champion: BTreeMap<ChampionId, Vec<PanelRow>>,
}

fn encode(f: &PlayerDerivedFeatures) -> Vec<f64> {
    let mut v = f.values();
    // Column 0 is timeSinceLastMatch, the last is the tier ordinal.
    let last = v.len() - 1;
    v[last] = v[last].or(Some(0.0));
    v[0] = v[0].or(Some(MISSING_GAP));
    v.into_iter().map(|x| x.unwrap_or(0.0)).collect()
}

impl PlayerPanel {
    pub fn build(tables: &TelemetryTables, features: &[PlayerDerivedFeatures]) -> Self {
        let by_match = crate::ingestion::index_matches(&tables.matches);
        let feats: HashMap<(&str, &str), &PlayerDerivedFeatures> = features
            .iter()
            .map(|f| ((f.match_id.as_str(), f.user_id.as_str()), f))
            .collect();
        let mut by_champion: BTreeMap<ChampionId, Vec<PanelRow>> = BTreeMap::new();
        for pm in &tables.player_matches {
            let (Some(m), Some(f)) = (
                by_match.get(pm.match_id.as_str()),
                feats.get(&(pm.match_id.as_str(), pm.user_id.as_str())),
            ) else {
                continue;
            };
            by_champion
                .entry(pm.champion.clone())
                .or_default()
                .push(PanelRow {
                    match_id: pm.match_id.clone(),
                    user_id: pm.user_id.clone(),
                    patch: m.patch,
                    start: m.start_time,
                    kills: pm.kills,
                    x: encode(f),
                });
        }
        for rows in by_champion.values_mut() {
            rows.sort_by(|a, b| {
                (a.start, &a.match_id, &a.user_id).cmp(&(b.start, &b.match_id, &b.user_id))
            });
        }
        let schema = feature_schema()
            .into_iter()
            .map(|(name, kind)| FeatureSpec::new(name, kind))
            .collect();
        Self {
            schema,
            by_champion,
        }
    }

    pub fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    pub fn rows(&self, champion: &ChampionId) -> &[PanelRow] {
        self.by_champion.get(champion).map_or(&[], Vec::as_slice)
    }

    pub fn champions(&self) -> impl Iterator<Item = &ChampionId> {
        self.by_champion.keys()
    }
}

/// Player-match units on `champion` across the two patches: `x` is the
/// derived-feature vector, `y` the kills in that match.
pub fn build_player_frame(
    panel: &PlayerPanel,
    catalog: &ChampionCatalog,
    champion: &ChampionId,
    pair: PatchPair,
) -> Result<TreatmentFrame, FrameError> {
    if !catalog.is_empty() && !catalog.contains(champion) {
        return Err(FrameError::UnknownChampion(champion.to_string()));
    }
    let mut frame =
        TreatmentFrame::new(panel.schema.clone(), OutcomeKind::CountKills, pair.into())?;
    for row in panel.rows(champion) {
        if row.patch == pair.control || row.patch == pair.treated {
            frame.push_row(&row.x, row.patch == pair.treated, f64::from(row.kills))?;
        }
    }
    if frame.is_empty() {
        return Err(FrameError::Empty(format!(
            "champion {champion} not played on {pair}"
        )));
    }
    let (n_treated, n_control) = frame.arm_sizes();
    if n_treated == 0 || n_control == 0 {
        return Err(FrameError::DegenerateArm {
            n_treated,
            n_control,
        });
    }
    Ok(frame)
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SkippedFrame {
    pub champion: ChampionId,
    pub pair: PatchPair,
    pub reason: String,
}

#[derive(Debug)]
pub enum BatchItem {
    Frame {
        champion: ChampionId,
        pair: PatchPair,
        frame: TreatmentFrame,
    },
    Skipped(SkippedFrame),
}

/// Every `champion × consecutive pair` combination, champions in the given
/// order and pairs in timeline order. Frames whose arms fall short of
/// `min_arm` rows come out as `Skipped`.
pub fn batch_frames<'a>(
    panel: &'a PlayerPanel,
    catalog: &'a ChampionCatalog,
    champions: &'a [ChampionId],
    timeline: &PatchTimeline,
    min_arm: usize,
) -> impl Iterator<Item = BatchItem> + 'a {
    let pairs = timeline.pairs();
    champions.iter().flat_map(move |champion| {
        pairs.clone().into_iter().map(move |pair| {
            let built = build_player_frame(panel, catalog, champion, pair)
                .and_then(|f| f.check_fittable(min_arm).map(|()| f));
            match built {
                Ok(frame) => BatchItem::Frame {
                    champion: champion.clone(),
                    pair,
                    frame,
                },
                Err(e) => {
                    log::info!("skipping frame {champion} {pair}: {e}");
                    BatchItem::Skipped(SkippedFrame {
                        champion: champion.clone(),
                        pair,
                        reason: e.to_string(),
                    })
                }
            }
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_features, DEFAULT_SESSION_GAP_SECS};
    use crate::ingestion::{MapMode, MatchRecord, PlayerMatchRecord, QueueType, Team};

    fn tables() -> TelemetryTables {
        let patches = [(4, 6), (4, 6), (4, 6), (4, 7), (4, 7), (4, 8)];
        let matches: Vec<MatchRecord> = patches
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| MatchRecord {
                match_id: format!("m{i}"),
                start_time: i as i64 * 10_000,
                duration: 1800,
                patch: PatchVersion::new(a, b),
                queue_type: QueueType::Ranked,
                queue_subtype: None,
                map_mode: MapMode::FiveVFive,
                season_id: 4,
                winning_team: Team::Blue,
            })
            .collect();
        let mut pms = Vec::new();
        for (i, m) in matches.iter().enumerate() {
            for (u, champ) in [("alice", "c"), ("bob", "d")] {
                pms.push(PlayerMatchRecord {
                    match_id: m.match_id.clone(),
                    user_id: u.into(),
                    team: Team::Blue,
                    champion: ChampionId::new(champ),
                    role: String::new(),
                    lane: String::new(),
                    kills: i as u32 + 2,
                    deaths: 1,
                    assists: 0,
                    gold_earned: 0,
                    gold_spent: 0,
                    champ_level: 10,
                    highest_prev_season_tier: None,
                });
            }
        }
        TelemetryTables {
            matches,
            player_matches: pms,
            ..Default::default()
        }
    }

    #[test]
    fn player_frame_rows_and_arms() {
        let t = tables();
        let feats = compute_features(&t, DEFAULT_SESSION_GAP_SECS);
        let panel = PlayerPanel::build(&t, &feats);
        let pair = PatchPair::new(PatchVersion::new(4, 6), PatchVersion::new(4, 7));
        let f = build_player_frame(
            &panel,
            &ChampionCatalog::default(),
            &ChampionId::new("c"),
            pair,
        )
        .unwrap();
        assert_eq!(f.n_rows(), 5);
        assert_eq!(f.arm_sizes(), (2, 3));
        assert_eq!(f.outcome_kind, OutcomeKind::CountKills);
        // The fourth match of alice (first treated row): 2+3+4 prior kills.
        let mk = f.feature_index("meanKillsAtStart").unwrap();
        assert_eq!(f.column(mk)[3], 3.0);
        assert_eq!(f.outcomes()[3], 5.0);
        assert!(f.treatment()[3]);
        let gap = f.feature_index("timeSinceLastMatch").unwrap();
        assert_eq!(f.column(gap)[0], MISSING_GAP);
    }

    #[test]
    fn absent_or_unknown_champion() {
        let t = tables();
        let panel = PlayerPanel::build(&t, &compute_features(&t, 900));
        let pair = PatchPair::new(PatchVersion::new(4, 6), PatchVersion::new(4, 7));
        let err = build_player_frame(
            &panel,
            &ChampionCatalog::default(),
            &ChampionId::new("zzz"),
            pair,
        )
        .unwrap_err();
        assert!(matches!(err, FrameError::Empty(_)));
        let pair = PatchPair::new(PatchVersion::new(4, 8), PatchVersion::new(4, 9));
        let err = build_player_frame(
            &panel,
            &ChampionCatalog::default(),
            &ChampionId::new("c"),
            pair,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            FrameError::DegenerateArm {
                n_treated: 0,
                n_control: 1
            }
        ));
    }

    #[test]
    fn batch_covers_every_combination() {
        let t = tables();
        let panel = PlayerPanel::build(&t, &compute_features(&t, 900));
        let timeline = crate::ingestion::build_patch_timeline(&t.matches);
        let champs = [ChampionId::new("c"), ChampionId::new("d")];
        let items: Vec<_> =
            batch_frames(&panel, &ChampionCatalog::default(), &champs, &timeline, 1).collect();
        assert_eq!(items.len(), 4);
        let skipped: Vec<_> = items
            .iter()
            .filter_map(|i| match i {
                BatchItem::Skipped(s) => Some(s.pair.to_string()),
                _ => None,
            })
            .collect();
        // 4.7-4.8 has a single treated row per champion.
        assert_eq!(skipped, ["4.7-4.8", "4.7-4.8"]);
    }
}
