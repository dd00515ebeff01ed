//! Fits one tree per champion × patch transition in parallel and aggregates
//! split importance across the batch.

use patchtree::analysis::{effect_gap_report, feature_importance, GapWeighting};
use patchtree::features::{compute_features, DEFAULT_SESSION_GAP_SECS};
use patchtree::frames::{batch_frames, BatchItem, PlayerPanel};
use patchtree::ingestion::{build_patch_timeline, top_champions};
use patchtree::synthetic::telemetry::{simulate_telemetry, TelemetrySpec};
use patchtree::{CausalTree, TreeConfig};
use rayon::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = simulate_telemetry(&TelemetrySpec {
        kill_shift_sd: 0.5,
        ..TelemetrySpec::default()
    });
    let all = sim.tables();
    let features = compute_features(&all, DEFAULT_SESSION_GAP_SECS);
    let ranked = all.competitive();
    let timeline = build_patch_timeline(&ranked.matches);
    let panel = PlayerPanel::build(&ranked, &features);
    let champions = top_champions(&ranked.player_matches, &sim.catalog, 8);

    let config = TreeConfig::default();
    let (frames, skipped): (Vec<_>, Vec<_>) = batch_frames(
        &panel,
        &sim.catalog,
        &champions,
        &timeline,
        config.min_arm_count,
    )
    .partition(|item| matches!(item, BatchItem::Frame { .. }));
    println!("{} frames, {} skipped", frames.len(), skipped.len());

    let trees: Vec<CausalTree> = frames
        .par_iter()
        .filter_map(|item| match item {
            BatchItem::Frame { frame, .. } => patchtree::fit(frame, &config).ok(),
            BatchItem::Skipped(_) => None,
        })
        .collect();
    println!(
        "{} trees, {} with at least one split",
        trees.len(),
        trees.iter().filter(|t| t.has_split()).count()
    );

    let importance = feature_importance(&trees);
    for e in importance.top(5) {
        println!(
            "  {:<32} weight {:>7}  share {:.3}",
            e.feature, e.total_weight, e.share
        );
    }
    for g in effect_gap_report(&trees, &importance, 5, GapWeighting::Unweighted) {
        println!(
            "  gap {:<28} n={:<3} mean {:+.3} ci {:?}",
            g.feature, g.n_splits, g.mean_gap, g.ci95
        );
    }
    Ok(())
}
