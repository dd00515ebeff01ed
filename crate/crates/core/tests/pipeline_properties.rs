//! Properties of ingestion, derived features, frames and analyses on
//! simulated telemetry and generated histories.

use std::collections::HashMap;
use std::sync::OnceLock;

use patchtree::analysis::{
    ate_series, feature_importance, heatmap_rows, heatmap_table, win_rate_series, HeatmapMode,
    Outcome,
};
use patchtree::features::FeatureKind;
use patchtree::features::{
    compute_features, feature_schema, rolling_stats, BinningSpec, HistoryMatch,
    DEFAULT_SESSION_GAP_SECS,
};
use patchtree::frames::{
    build_player_frame, build_team_frame, write_frame_csv, FeatureSpec, OutcomeKind, PlayerPanel,
    TreatmentFrame, TreatmentMeta,
};
use patchtree::ingestion::{build_patch_timeline, filter_competitive, top_champions, Team};
use patchtree::synthetic::telemetry::{simulate_telemetry, SimulatedTelemetry, TelemetrySpec};
use patchtree::tree::{fit, TreeConfig};
use proptest::prelude::*;

fn sim() -> &'static SimulatedTelemetry {
    static SIM: OnceLock<SimulatedTelemetry> = OnceLock::new();
    SIM.get_or_init(|| {
        simulate_telemetry(&TelemetrySpec {
            ranked_share: 0.8,
            ..TelemetrySpec::default()
        })
    })
}

#[test]
fn competitive_filter_is_idempotent() {
    let once = filter_competitive(&sim().matches);
    assert!(once.len() < sim().matches.len());
    assert_eq!(filter_competitive(&once), once);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn timeline_ignores_row_order(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rows = sim().matches.clone();
        rows.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(build_patch_timeline(&rows), build_patch_timeline(&sim().matches));
    }

    #[test]
    fn top_k_is_prefix(k1 in 0usize..25, extra in 0usize..10) {
        let s = sim();
        let small = top_champions(&s.player_matches, &s.catalog, k1);
        let big = top_champions(&s.player_matches, &s.catalog, k1 + extra);
        prop_assert_eq!(&big[..small.len()], &small[..]);
    }
}

fn history_strategy() -> impl Strategy<Value = Vec<HistoryMatch>> {
    prop::collection::vec(
        (
            0i64..4000,
            600i64..3000,
            0u32..20,
            0u32..15,
            0u32..25,
            any::<bool>(),
        ),
        1..25,
    )
    .prop_map(|rows| {
        let mut t = 1_000_000;
        rows.into_iter()
            .enumerate()
            .map(|(i, (gap, dur, k, d, a, won))| {
                t += gap;
                let m = HistoryMatch {
                    match_id: format!("m{i:03}"),
                    start: t,
                    duration: dur,
                    kills: k,
                    deaths: d,
                    assists: a,
                    gold_earned: 5000 + 300 * u64::from(k),
                    gold_spent: 4800 + 250 * u64::from(k),
                    champ_level: 8 + (k % 10) as u8,
                    won,
                    tier: None,
                };
                t += dur;
                m
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn features_never_see_the_current_match(hist in history_strategy(), i in any::<prop::sample::Index>()) {
        let i = i.index(hist.len());
        let base = rolling_stats("u", &hist, DEFAULT_SESSION_GAP_SECS);
        let mut changed = hist.clone();
        let m = &mut changed[i];
        m.kills += 7;
        m.deaths += 3;
        m.assists = 0;
        m.gold_earned *= 2;
        m.gold_spent += 1;
        m.champ_level = 18;
        m.won = !m.won;
        let after = rolling_stats("u", &changed, DEFAULT_SESSION_GAP_SECS);
        prop_assert_eq!(&base[..=i], &after[..=i]);
    }

    #[test]
    fn appending_matches_keeps_past_features(hist in history_strategy(), k in any::<prop::sample::Index>()) {
        let k = k.index(hist.len()) + 1;
        let full = rolling_stats("u", &hist, DEFAULT_SESSION_GAP_SECS);
        let prefix = rolling_stats("u", &hist[..k], DEFAULT_SESSION_GAP_SECS);
        prop_assert_eq!(&full[..k], &prefix[..]);
    }

    #[test]
    fn feature_bounds(hist in history_strategy()) {
        let schema = feature_schema();
        let idx = |name: &str| schema.iter().position(|(n, _)| n == name).unwrap();
        for f in rolling_stats("u", &hist, DEFAULT_SESSION_GAP_SECS) {
            let v = f.values();
            let played = v[idx("matchesPlayedSoFar")].unwrap();
            prop_assert!(v[idx("cumWinsAtStart")].unwrap() <= played);
            let mw = v[idx("meanWinsAtStart")].unwrap();
            prop_assert!((0.0..=1.0).contains(&mw));
            for stat in ["Kills", "Deaths", "Assists", "GoldEarned", "GoldSpent", "MatchDuration", "Wins"] {
                let s = v[idx(&format!("sessionCum{stat}AtStart"))].unwrap();
                let c = v[idx(&format!("cum{stat}AtStart"))].unwrap();
                prop_assert!(s <= c, "{}: {} > {}", stat, s, c);
            }
            prop_assert!(f.match_index_in_session >= 1);
            prop_assert!(f.session.matches < f.match_index_in_session);
        }
    }
}

#[test]
fn team_frame_rows_and_complementary_outcomes() {
    let s = sim();
    let matches = filter_competitive(&s.matches);
    let timeline = build_patch_timeline(&matches);
    let pair = timeline.pairs()[0];
    let frame = build_team_frame(&matches, &s.player_matches, &s.catalog, pair).unwrap();
    let on_pair = matches
        .iter()
        .filter(|m| m.patch == pair.control || m.patch == pair.treated)
        .count();
    assert_eq!(frame.n_rows(), 2 * on_pair);
    for k in 0..on_pair {
        assert_eq!(frame.outcomes()[2 * k] + frame.outcomes()[2 * k + 1], 1.0);
    }

    let bytes = |f: &TreatmentFrame| {
        let mut b = Vec::new();
        write_frame_csv(f, &mut b).unwrap();
        b
    };
    let again = build_team_frame(&matches, &s.player_matches, &s.catalog, pair).unwrap();
    assert_eq!(bytes(&frame), bytes(&again));
}

#[test]
fn player_frame_counts_picks() {
    let s = sim();
    let tables = s.tables().competitive();
    let feats = compute_features(&s.tables(), DEFAULT_SESSION_GAP_SECS);
    let panel = PlayerPanel::build(&tables, &feats);
    let timeline = build_patch_timeline(&tables.matches);
    let pair = timeline.pairs()[1];
    let champion = &top_champions(&tables.player_matches, &s.catalog, 1)[0];
    let frame = build_player_frame(&panel, &s.catalog, champion, pair).unwrap();
    let patch_of: HashMap<&str, _> = tables
        .matches
        .iter()
        .map(|m| (m.match_id.as_str(), m.patch))
        .collect();
    let picks = tables
        .player_matches
        .iter()
        .filter(|p| &p.champion == champion)
        .filter(|p| [pair.control, pair.treated].contains(&patch_of[p.match_id.as_str()]))
        .count();
    assert_eq!(frame.n_rows(), picks);
}

#[test]
fn ate_series_equals_tree_root_effect() {
    let s = sim();
    let tables = s.tables().competitive();
    let timeline = build_patch_timeline(&tables.matches);
    let series = ate_series(
        &tables.matches,
        &tables.player_matches,
        &timeline,
        Outcome::Kills,
    )
    .unwrap();
    let patch_of: HashMap<&str, _> = tables
        .matches
        .iter()
        .map(|m| (m.match_id.as_str(), m.patch))
        .collect();
    for cell in &series.cells {
        let schema = vec![FeatureSpec::new("level", FeatureKind::Count)];
        let mut frame = TreatmentFrame::new(
            schema,
            OutcomeKind::CountKills,
            TreatmentMeta::from(cell.pair),
        )
        .unwrap();
        for p in &tables.player_matches {
            let patch = patch_of[p.match_id.as_str()];
            if patch == cell.pair.control || patch == cell.pair.treated {
                frame
                    .push_row(
                        &[f64::from(p.champ_level)],
                        patch == cell.pair.treated,
                        f64::from(p.kills),
                    )
                    .unwrap();
            }
        }
        let tree = fit(&frame, &TreeConfig::default()).unwrap();
        let (a, b) = (cell.estimate.unwrap(), tree.root.effect);
        assert!((a.tau - b.tau).abs() <= 1e-9, "{} vs {}", a.tau, b.tau);
        assert!((a.se - b.se).abs() <= 1e-9);
        assert!((a.p_value - b.p_value).abs() <= 1e-9);
    }
}

#[test]
fn both_teams_of_a_match_split_one_win() {
    let s = sim();
    let one: Vec<_> = s.matches.iter().take(1).cloned().collect();
    let id = &one[0].match_id;
    let rows: Vec<_> = s
        .player_matches
        .iter()
        .filter(|p| &p.match_id == id)
        .cloned()
        .collect();
    let blue = rows
        .iter()
        .find(|p| p.team == Team::Blue)
        .unwrap()
        .champion
        .clone();
    let red = rows
        .iter()
        .find(|p| p.team == Team::Red && p.champion != blue)
        .unwrap()
        .champion
        .clone();
    let rb = win_rate_series(&one, &rows, &blue).cells[0].rate;
    let rr = win_rate_series(&one, &rows, &red).cells[0].rate;
    assert_eq!(rb + rr, 1.0);
}

#[test]
fn heatmap_counts_and_pooled_identity() {
    let s = sim();
    let tables = s.tables().competitive();
    let feats = compute_features(&s.tables(), DEFAULT_SESSION_GAP_SECS);
    let timeline = build_patch_timeline(&tables.matches);
    let rows = heatmap_rows(&tables, &feats, "meanKillsAtStart", Outcome::Kills).unwrap();
    let spec = BinningSpec::quartiles("meanKillsAtStart", true);

    let mean = heatmap_table(&rows, &spec, &timeline, HeatmapMode::MeanOutcome).unwrap();
    assert_eq!(
        mean.total_count(),
        rows.iter().filter(|r| r.value.is_some()).count()
    );

    let ate = heatmap_table(&rows, &spec, &timeline, HeatmapMode::Ate).unwrap();
    let series = ate_series(
        &tables.matches,
        &tables.player_matches,
        &timeline,
        Outcome::Kills,
    )
    .unwrap();
    for (col, cell) in series.cells.iter().enumerate() {
        let pooled = ate.pooled_ate(col).unwrap();
        assert!((pooled - cell.estimate.unwrap().tau).abs() <= 1e-9);
    }
}

#[test]
fn importance_weight_is_internal_sample_sum() {
    let s = sim();
    let tables = s.tables().competitive();
    let feats = compute_features(&s.tables(), DEFAULT_SESSION_GAP_SECS);
    let panel = PlayerPanel::build(&tables, &feats);
    let timeline = build_patch_timeline(&tables.matches);
    let config = TreeConfig {
        alpha: 0.3,
        ..TreeConfig::default()
    };
    let trees: Vec<_> = top_champions(&tables.player_matches, &s.catalog, 6)
        .iter()
        .flat_map(|c| timeline.pairs().into_iter().map(move |p| (c.clone(), p)))
        .filter_map(|(c, p)| build_player_frame(&panel, &s.catalog, &c, p).ok())
        .filter_map(|f| fit(&f, &config).ok())
        .collect();
    let report = feature_importance(&trees);
    let expected: usize = trees
        .iter()
        .flat_map(|t| t.root.internal_nodes())
        .map(|n| n.samples)
        .sum();
    assert!(expected > 0, "no tree split at all");
    assert_eq!(report.total_weight() as usize, expected);
    let share_sum: f64 = report.entries.iter().map(|e| e.share).sum();
    assert!((share_sum - 1.0).abs() < 1e-12);
}
