use serde::{Deserialize, Serialize};

use super::{CausalTree, EffectEstimate, Split, TreeNode};

/// A tree prepared for display: nodes carry a significance mark and
/// uninteresting subtrees are collapsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayTree {
    pub alpha: f64,
    pub root: DisplayNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayNode {
    #[serde(flatten)]
    pub effect: EffectEstimate,
    pub samples: usize,
    pub depth: u32,
    pub significant: bool,
    /// The fitted node had children that were trimmed away.
    pub collapsed: bool,
    pub split: Option<Split>,
    pub left: Option<Box<DisplayNode>>,
    pub right: Option<Box<DisplayNode>>,
}

impl DisplayNode {
    pub fn node_count(&self) -> usize {
        1 + self.left.as_ref().map_or(0, |n| n.node_count())
            + self.right.as_ref().map_or(0, |n| n.node_count())
    }
}

fn significant(node: &TreeNode, alpha: f64) -> bool {
    alpha >= 1.0 || node.effect.p_value < alpha
}

fn any_significant(node: &TreeNode, alpha: f64) -> bool {
    let mut found = false;
    node.walk(&mut |n| found |= significant(n, alpha));
    found
}

fn convert(node: &TreeNode, mark_alpha: f64, prune_alpha: Option<f64>) -> DisplayNode {
    let keep_children = node
        .children()
        .filter(|_| prune_alpha.is_none_or(|a| any_significant(node, a)));
    let (left, right, split) = match keep_children {
        Some((l, r)) => (
            Some(Box::new(convert(l, mark_alpha, prune_alpha))),
            Some(Box::new(convert(r, mark_alpha, prune_alpha))),
            node.split.clone(),
        ),
        None => (None, None, None),
    };
    DisplayNode {
        effect: node.effect,
        samples: node.samples,
        depth: node.depth,
        significant: significant(node, mark_alpha),
        collapsed: !node.is_leaf() && left.is_none(),
        split,
        left,
        right,
    }
}

impl DisplayTree {
    /// Every fitted node, marked significant at `alpha`.
    pub fn full(tree: &CausalTree, alpha: f64) -> Self {
        Self {
            alpha,
            root: convert(&tree.root, alpha, None),
        }
    }
}

/// Collapses every subtree that holds no node with `p < alpha_display` into
/// a leaf. The fitted tree is left untouched. `alpha_display >= 1` keeps
/// everything.
pub fn trim(tree: &CausalTree, alpha_display: f64) -> DisplayTree {
    DisplayTree {
        alpha: alpha_display,
        root: convert(&tree.root, alpha_display, Some(alpha_display)),
    }
}
