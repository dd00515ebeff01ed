//! Exports a fitted tree as JSON and DOT, then shows how the display
//! threshold collapses non-significant subtrees.

use patchtree::synthetic::{generate, SyntheticSpec};
use patchtree::tree::{export, to_dot, trim, ExportFormat};
use patchtree::{CausalTree, TreeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (frame, _) = generate(&SyntheticSpec::two_box(4_000, 4, 1.0, 0.0, 0.5, 3))?;
    let tree = patchtree::fit(&frame, &TreeConfig::default().with_seed(3))?;

    let json = export(&tree, ExportFormat::Json);
    let back: CausalTree = serde_json::from_str(&json)?;
    assert_eq!(export(&back, ExportFormat::Json), json);
    println!("JSON export: {} bytes, round-trips exactly", json.len());

    for alpha in [1.0, 0.05, 1e-200, 1e-300] {
        println!(
            "alpha {alpha:e}: {} nodes shown",
            trim(&tree, alpha).root.node_count()
        );
    }
    println!("{}", to_dot(&trim(&tree, 0.05)));
    Ok(())
}
