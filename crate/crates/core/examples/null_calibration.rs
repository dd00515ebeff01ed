//! Fits trees on frames with no effect heterogeneity and reports how often
//! the significance gates still let a split through.

use patchtree::synthetic::{generate, SyntheticSpec};
use patchtree::TreeConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs: u64 = std::env::args().nth(1).map_or(Ok(100), |s| s.parse())?;
    let mut split = 0;
    for seed in 0..runs {
        let (frame, _) = generate(&SyntheticSpec::null(2_000, 5, seed))?;
        let tree = patchtree::fit(&frame, &TreeConfig::default().with_seed(seed))?;
        if tree.has_split() {
            split += 1;
            let s = tree.root.split.as_ref().unwrap();
            println!(
                "seed {seed}: spurious split on {} at {:.3}",
                s.feature, s.threshold
            );
        }
    }
    println!(
        "{split}/{runs} null frames split ({:.1}%)",
        100.0 * split as f64 / runs as f64
    );
    Ok(())
}
