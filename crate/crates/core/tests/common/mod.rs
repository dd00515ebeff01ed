#![allow(dead_code)]

use patchtree::frames::TreatmentFrame;
use patchtree::synthetic::{generate, OracleCate, SyntheticSpec};
use patchtree::tree::{CausalTree, TreeNode};

pub fn two_box(n: usize, n_features: usize, seed: u64) -> (TreatmentFrame, OracleCate) {
    generate(&SyntheticSpec::two_box(n, n_features, 1.0, -1.0, 0.5, seed)).unwrap()
}

pub fn null_frame(n: usize, n_features: usize, seed: u64) -> TreatmentFrame {
    generate(&SyntheticSpec::null(n, n_features, seed))
        .unwrap()
        .0
}

/// Preorder node list.
pub fn nodes(tree: &CausalTree) -> Vec<&TreeNode> {
    let mut out = Vec::new();
    tree.root.walk(&mut |n| out.push(n));
    out
}

/// (depth, split feature, threshold bits, samples) per node, preorder.
pub fn shape(tree: &CausalTree) -> Vec<(u32, Option<String>, Option<u64>, usize)> {
    nodes(tree)
        .into_iter()
        .map(|n| {
            (
                n.depth,
                n.split.as_ref().map(|s| s.feature.clone()),
                n.split.as_ref().map(|s| s.threshold.to_bits()),
                n.samples,
            )
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
