//! Simulates match telemetry, writes it as CSV and reads it back through the
//! validating loader.
//!
//! ```text
//! cargo run --example simulate_telemetry -- /tmp/telemetry
//! ```
//! The directory can then be fed to the CLI:
//! `patchtree --matches /tmp/telemetry/matches.csv --player-matches
//! /tmp/telemetry/player_matches.csv --catalog /tmp/telemetry/champions.csv fit`.

use std::path::PathBuf;

use patchtree::ingestion::{
    build_patch_timeline, load_catalog, load_matches, top_champions, LoadOptions,
};
use patchtree::synthetic::telemetry::{simulate_telemetry, TelemetrySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map_or_else(
        || std::env::temp_dir().join("patchtree-telemetry"),
        PathBuf::from,
    );

    let sim = simulate_telemetry(&TelemetrySpec::default());
    sim.write_csvs(&dir)?;
    println!(
        "wrote {} matches, {} player rows to {}",
        sim.matches.len(),
        sim.player_matches.len(),
        dir.display()
    );

    let catalog = load_catalog(&dir.join("champions.csv"))?;
    let opts = LoadOptions {
        catalog: Some(&catalog),
        ..LoadOptions::default()
    };
    let tables = load_matches(
        &dir.join("matches.csv"),
        &dir.join("player_matches.csv"),
        &opts,
    )?;
    println!(
        "loaded {} rows, {} rejected",
        tables.rows_read,
        tables.rejects.len()
    );

    let ranked = tables.competitive();
    println!("{} ranked 5v5 matches", ranked.matches.len());
    let timeline = build_patch_timeline(&ranked.matches);
    for e in timeline.entries() {
        println!("  patch {} first seen at {}", e.version, e.first_seen);
    }
    let top: Vec<String> = top_champions(&ranked.player_matches, &catalog, 5)
        .iter()
        .map(|c| catalog.display_name(c).to_string())
        .collect();
    println!("most played: {}", top.join(", "));
    Ok(())
}
