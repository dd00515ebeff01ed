//! Descriptive patch-level analyses: kill ATE per transition, champion win
//! rates and their correlation, and a binned heatmap.

use patchtree::analysis::{
    ate_series, correlate, heatmap_rows, heatmap_table, win_rate_series, HeatmapMode, Outcome,
};
use patchtree::features::{compute_features, BinningSpec, DEFAULT_SESSION_GAP_SECS};
use patchtree::ingestion::{build_patch_timeline, top_champions};
use patchtree::synthetic::telemetry::{simulate_telemetry, TelemetrySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = simulate_telemetry(&TelemetrySpec {
        kill_shift_sd: 0.4,
        ..TelemetrySpec::default()
    });
    let all = sim.tables();
    let ranked = all.competitive();
    let timeline = build_patch_timeline(&ranked.matches);

    let ate = ate_series(
        &ranked.matches,
        &ranked.player_matches,
        &timeline,
        Outcome::Kills,
    )?;
    for cell in &ate.cells {
        if let Some(e) = &cell.estimate {
            println!(
                "{}: kills {:+.3} (se {:.3}, p {:.3})",
                cell.pair, e.tau, e.se, e.p_value
            );
        }
    }

    let top = top_champions(&ranked.player_matches, &sim.catalog, 2);
    let series: Vec<_> = top
        .iter()
        .map(|c| win_rate_series(&ranked.matches, &ranked.player_matches, c))
        .collect();
    for s in &series {
        let rates: Vec<String> = s
            .cells
            .iter()
            .map(|c| format!("{}={:.3}", c.patch, c.rate))
            .collect();
        println!(
            "{}: {}",
            sim.catalog.display_name(&s.champion),
            rates.join(" ")
        );
    }
    if let [a, b] = series.as_slice() {
        match correlate(a, b) {
            Ok(c) => println!(
                "win-rate correlation r={:.3} p={:.3} over {} patches",
                c.r, c.p_value, c.n
            ),
            Err(e) => println!("no correlation: {e}"),
        }
    }

    let features = compute_features(&all, DEFAULT_SESSION_GAP_SECS);
    let rows = heatmap_rows(&ranked, &features, "meanKillsAtStart", Outcome::Kills)?;
    let table = heatmap_table(
        &rows,
        &BinningSpec::quartiles("meanKillsAtStart", true),
        &timeline,
        HeatmapMode::MeanOutcome,
    )?;
    println!(
        "\nmean kills by prior-kills bin ({} rows)",
        table.total_count()
    );
    for (label, cells) in table.bin_labels.iter().zip(&table.cells) {
        let values: Vec<String> = cells
            .iter()
            .map(|c| c.value.map_or("-".into(), |v| format!("{v:.2}")))
            .collect();
        println!("  {label:<16} {}", values.join("  "));
    }
    Ok(())
}
