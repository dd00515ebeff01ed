//! Causal trees: greedy recursive partitioning of the feature space into
//! cells whose difference-in-means treatment effects are estimated with a
//! Welch t-test.
//!
//! A split is chosen to minimize the sample-weighted variance of the child
//! effect estimates and is accepted only when the child effects differ
//! significantly on the training rows and the difference replicates, with
//! the same sign, on a held-out validation partition.

mod effect;
mod export;
mod fit;
mod trim;

use serde::{Deserialize, Serialize};

use crate::frames::FrameError;

pub use effect::{difference_p_value, estimate_effect, welch, ArmSummary, EffectEstimate};
pub use export::{export, to_dot, to_json, ExportFormat};
pub use fit::fit;
pub use trim::{trim, DisplayNode, DisplayTree};

/// Generator behind the validation-row draw in [`fit`].
pub const VALIDATION_RNG: &str =
    "ChaCha8 (rand_chacha 0.9), seed_from_u64(config.seed), Fisher-Yates shuffle of row indices";

#[derive(Debug, thiserror::Error)]
pub enum TreeError {
    #[error("insufficient arm for inference: {n_treated} treated, {n_control} control")]
    InsufficientArm { n_treated: usize, n_control: usize },
    #[error("invalid tree config: {0}")]
    Config(String),
    #[error("unfittable frame: {0}")]
    Unfittable(#[from] FrameError),
    #[error("feature vector has {got} values, tree expects {expected}")]
    Schema { expected: usize, got: usize },
    #[error("tree invariant violated: {0}")]
    Invariant(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    /// Minimize `(n_L se_L^2 + n_R se_R^2) / n`.
    #[default]
    ExpectedVariance,
    /// Maximize `n_L n_R (tau_L - tau_R)^2 / n^2`.
    Heterogeneity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// Minimum node size as a fraction of the root sample count.
    pub min_leaf_fraction: f64,
    pub max_depth: u32,
    /// Significance level for the split gate.
    pub alpha: f64,
    /// Minimum rows per arm in every node.
    pub min_arm_count: usize,
    /// Share of rows held out for the validation gate.
    pub validation_fraction: f64,
    pub candidate_thresholds_per_feature: usize,
    pub split_criterion: SplitCriterion,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            min_leaf_fraction: 0.05,
            max_depth: 10,
            alpha: 0.05,
            min_arm_count: 10,
            validation_fraction: 0.25,
            candidate_thresholds_per_feature: 100,
            split_criterion: SplitCriterion::ExpectedVariance,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<(), TreeError> {
        let bad = |s: &str| Err(TreeError::Config(s.to_string()));
        if !(self.min_leaf_fraction > 0.0 && self.min_leaf_fraction < 0.5) {
            return bad("min_leaf_fraction must lie in (0, 0.5)");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return bad("validation_fraction must lie in (0, 0.5)");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.candidate_thresholds_per_feature == 0 {
            return bad("candidate_thresholds_per_feature must be positive");
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: String,
    /// Rows with `feature >= threshold` go left.
    pub threshold: f64,
    #[serde(skip)]
    pub feature_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(flatten)]
    pub effect: EffectEstimate,
    pub samples: usize,
    pub depth: u32,
    pub split: Option<Split>,
    /// `feature >= threshold`.
    pub left: Option<Box<TreeNode>>,
    /// `feature < threshold`.
    pub right: Option<Box<TreeNode>>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    pub fn children(&self) -> Option<(&TreeNode, &TreeNode)> {
        match (&self.left, &self.right) {
            (Some(l), Some(r)) => Some((l, r)),
            _ => None,
        }
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a TreeNode)) {
        visit(self);
        if let Some((l, r)) = self.children() {
            l.walk(visit);
            r.walk(visit);
        }
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if n.is_leaf() {
                out.push(n)
            }
        });
        out
    }

    pub fn internal_nodes(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if !n.is_leaf() {
                out.push(n)
            }
        });
        out
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    pub fn max_depth(&self) -> u32 {
        let mut d = 0;
        self.walk(&mut |n| d = d.max(n.depth));
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalTree {
    pub config: TreeConfig,
    pub seed: u64,
    pub frame_sha256: String,
    pub features: Vec<String>,
    pub root: TreeNode,
}

impl CausalTree {
    /// Leaf effect for a feature vector in the frame's schema order.
    pub fn predict(&self, x: &[f64]) -> Result<&EffectEstimate, TreeError> {
        Ok(&self.leaf_for(x)?.effect)
    }

    pub fn leaf_for(&self, x: &[f64]) -> Result<&TreeNode, TreeError> {
        if x.len() != self.features.len() {
            return Err(TreeError::Schema {
                expected: self.features.len(),
                got: x.len(),
            });
        }
        let mut node = &self.root;
        while let (Some(split), Some((left, right))) = (&node.split, node.children()) {
            node = if x[split.feature_index] >= split.threshold {
                left
            } else {
                right
            };
        }
        Ok(node)
    }

    pub fn has_split(&self) -> bool {
        !self.root.is_leaf()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    /// Parses the JSON written by [`CausalTree::to_json`].
    pub fn from_json(s: &str) -> Result<Self, TreeError> {
        let mut tree: CausalTree = serde_json::from_str(s)?;
        let features = tree.features.clone();
        fn fix(node: &mut TreeNode, features: &[String]) -> Result<(), TreeError> {
            if let Some(split) = &mut node.split {
                split.feature_index = features
                    .iter()
                    .position(|f| *f == split.feature)
                    .ok_or_else(|| {
                        TreeError::Invariant(format!("unknown split feature `{}`", split.feature))
                    })?;
            }
            for child in [&mut node.left, &mut node.right].into_iter().flatten() {
                fix(child, features)?;
            }
            Ok(())
        }
        fix(&mut tree.root, &features)?;
        Ok(tree)
    }

    /// Relative gap between the root effect and its leaf-wise decomposition
    /// `sum_l (n1_l/n1) mean1_l - sum_l (n0_l/n0) mean0_l`.
    pub fn decomposition_error(&self) -> f64 {
        let root = &self.root.effect;
        let (n1, n0) = (root.n_treated as f64, root.n_control as f64);
        let (mut treated, mut control) = (0.0, 0.0);
        for leaf in self.root.leaves() {
            treated += leaf.effect.n_treated as f64 / n1 * leaf.effect.mean_treated;
            control += leaf.effect.n_control as f64 / n0 * leaf.effect.mean_control;
        }
        let scale = root
            .mean_treated
            .abs()
            .max(root.mean_control.abs())
            .max(root.tau.abs())
            .max(1e-300);
        ((treated - control) - root.tau).abs() / scale
    }

    /// Checks sample accounting, depth and minimum-size constraints.
    pub fn check_invariants(&self) -> Result<(), TreeError> {
        let n_root = self.root.samples;
        let min_leaf = min_leaf_count(&self.config, n_root);
        let mut err = None;
        self.root.walk(&mut |n| {
            if err.is_some() {
                return;
            }
            if n.samples != n.effect.samples() {
                err = Some(format!(
                    "node samples {} != arm total {}",
                    n.samples,
                    n.effect.samples()
                ));
            } else if n.depth > self.config.max_depth {
                err = Some(format!("depth {} exceeds max_depth", n.depth));
            } else if n.samples < min_leaf {
                err = Some(format!(
                    "node with {} samples below min leaf {min_leaf}",
                    n.samples
                ));
            } else if let Some((l, r)) = n.children() {
                if l.samples + r.samples != n.samples
                    || l.effect.n_treated + r.effect.n_treated != n.effect.n_treated
                {
                    err = Some("children do not partition their parent".to_string());
                } else if n.split.is_none() {
                    err = Some("children without a split".to_string());
                }
            } else if n.split.is_some() {
                err = Some("split without children".to_string());
            }
        });
        err.map_or(Ok(()), |e| Err(TreeError::Invariant(e)))
    }
}

pub(crate) fn min_leaf_count(config: &TreeConfig, n_root: usize) -> usize {
    ((config.min_leaf_fraction * n_root as f64).ceil() as usize).max(1)
}
