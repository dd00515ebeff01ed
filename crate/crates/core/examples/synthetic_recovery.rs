//! Plants a two-box treatment effect, fits a tree and scores it against the
//! known effect surface.
//!
//! ```text
//! cargo run --release --example synthetic_recovery -- 7
//! ```

use patchtree::synthetic::{evaluate_tree, generate, SyntheticSpec};
use patchtree::tree::{to_dot, trim};
use patchtree::TreeConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let spec = SyntheticSpec::two_box(10_000, 5, 1.0, -1.0, 0.5, seed);
    let (frame, oracle) = generate(&spec)?;
    let (treated, control) = frame.arm_sizes();
    println!(
        "frame: {} rows ({treated} treated, {control} control), {} features",
        frame.n_rows(),
        frame.schema().len()
    );

    let tree = patchtree::fit(&frame, &TreeConfig::default().with_seed(seed))?;
    for leaf in tree.root.leaves() {
        println!(
            "leaf n={:5}  tau={:+.3}  se={:.3}",
            leaf.samples, leaf.effect.tau, leaf.effect.se
        );
    }
    let eval = evaluate_tree(&tree, &oracle, 5_000, seed)?;
    println!(
        "MAE vs truth {:.4}, sign agreement {:?}",
        eval.mean_absolute_error, eval.sign_agreement
    );
    println!("{}", to_dot(&trim(&tree, 0.05)));
    Ok(())
}
