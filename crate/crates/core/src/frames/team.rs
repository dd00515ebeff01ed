use std::collections::BTreeMap;

use crate::features::FeatureKind;
use crate::ingestion::{
    ChampionCatalog, ChampionType, MatchRecord, PatchPair, PlayerMatchRecord, Team,
};

use super::{FeatureSpec, FrameError, OutcomeKind, TreatmentFrame};

/// One presence indicator per catalog champion (`champ_<name>`, by name),
/// then one count per champion type (`n_<types>`).
pub fn team_feature_schema(catalog: &ChampionCatalog) -> Vec<FeatureSpec> {
    let mut schema: Vec<FeatureSpec> = catalog
        .by_name()
        .into_iter()
        .map(|(_, info)| FeatureSpec::new(format!("champ_{}", info.name), FeatureKind::Binary))
        .collect();
    schema.extend(
        ChampionType::ALL
            .iter()
            .map(|t| FeatureSpec::new(format!("n_{}", t.plural()), FeatureKind::Count)),
    );
    schema
}

/// Two rows per match on either patch of `pair` (blue then red), ordered by
/// match start. `y = 1` when that team won; `w = 1` on the treated patch.
/// Matches where a team does not field exactly 5 catalog champions are skipped.
pub fn build_team_frame(
    matches: &[MatchRecord],
    player_matches: &[PlayerMatchRecord],
    catalog: &ChampionCatalog,
    pair: PatchPair,
) -> Result<TreatmentFrame, FrameError> {
    let champ_slot: BTreeMap<_, usize> = catalog
        .by_name()
        .into_iter()
        .enumerate()
        .map(|(i, (id, _))| (id.clone(), i))
        .collect();
    let n_champs = champ_slot.len();
    let type_slot =
        |t: ChampionType| n_champs + ChampionType::ALL.iter().position(|x| *x == t).unwrap();

    let mut rosters: BTreeMap<(&str, Team), Vec<&PlayerMatchRecord>> = BTreeMap::new();
    for pm in player_matches {
        rosters
            .entry((pm.match_id.as_str(), pm.team))
            .or_default()
            .push(pm);
    }

    let mut selected: Vec<&MatchRecord> = matches
        .iter()
        .filter(|m| m.patch == pair.control || m.patch == pair.treated)
        .collect();
    selected.sort_by(|a, b| {
        a.start_time
            .cmp(&b.start_time)
            .then_with(|| a.match_id.cmp(&b.match_id))
    });
    for patch in [pair.control, pair.treated] {
        if !selected.iter().any(|m| m.patch == patch) {
            return Err(FrameError::MissingPatch(patch.to_string()));
        }
    }

    let mut frame = TreatmentFrame::new(
        team_feature_schema(catalog),
        OutcomeKind::BinaryWin,
        pair.into(),
    )?;
    let mut x = vec![0.0; frame.schema().len()];
    let mut skipped = 0usize;
    'matches: for m in selected {
        let mut rows = Vec::with_capacity(2);
        for team in [Team::Blue, Team::Red] {
            let roster = rosters
                .get(&(m.match_id.as_str(), team))
                .map_or(&[][..], Vec::as_slice);
            if roster.len() != 5 {
                skipped += 1;
                continue 'matches;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            for pm in roster {
                let (Some(&slot), Some(info)) =
                    (champ_slot.get(&pm.champion), catalog.get(&pm.champion))
                else {
                    skipped += 1;
                    continue 'matches;
                };
                x[slot] = 1.0;
                x[type_slot(info.champion_type)] += 1.0;
            }
            rows.push((x.clone(), team == m.winning_team));
        }
        for (x, won) in rows {
            frame.push_row(&x, m.patch == pair.treated, f64::from(u8::from(won)))?;
        }
    }
    if skipped > 0 {
        log::warn!("team frame {pair}: skipped {skipped} matches without two full catalog rosters");
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
