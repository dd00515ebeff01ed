//! Builds the team-composition frame for one patch transition from simulated
//! telemetry, writes it as CSV with its sidecar and fits a tree on it. Each
//! match contributes one winning and one losing team, so the root effect is
//! zero by construction; only subgroups can move.

use patchtree::frames::{build_team_frame, write_frame_csv, FrameSidecar};
use patchtree::ingestion::build_patch_timeline;
use patchtree::synthetic::telemetry::{simulate_telemetry, TelemetrySpec};
use patchtree::tree::trim;
use patchtree::TreeConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = simulate_telemetry(&TelemetrySpec::default());
    let tables = sim.tables().competitive();
    let timeline = build_patch_timeline(&tables.matches);
    let pair = *timeline.pairs().first().ok_or("need two patches")?;

    let frame = build_team_frame(&tables.matches, &tables.player_matches, &sim.catalog, pair)?;
    let (treated, control) = frame.arm_sizes();
    println!(
        "team frame {pair}: {} rows ({treated}/{control}), {} features",
        frame.n_rows(),
        frame.schema().len()
    );

    let dir = std::env::temp_dir().join("patchtree-team-frame");
    std::fs::create_dir_all(&dir)?;
    write_frame_csv(&frame, std::fs::File::create(dir.join("frame.csv"))?)?;
    serde_json::to_writer_pretty(
        std::fs::File::create(dir.join("frame.json"))?,
        &FrameSidecar::describe(&frame),
    )?;
    println!("wrote {}", dir.display());

    let tree = patchtree::fit(&frame, &TreeConfig::default())?;
    let display = trim(&tree, 0.05);
    println!(
        "root win-rate change {:+.4} (p {:.3}); {} nodes after trimming",
        tree.root.effect.tau,
        tree.root.effect.p_value,
        display.root.node_count()
    );
    Ok(())
}
