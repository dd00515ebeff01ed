use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tree::CausalTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub total_weight: u64,
    pub share: f64,
}

/// Features sorted by share, descending (ties by name).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportanceReport {
    pub entries: Vec<FeatureImportance>,
}

impl FeatureImportanceReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.entries.iter().map(|e| e.total_weight).sum()
    }

    pub fn share_of(&self, feature: &str) -> f64 {
        self.entries
            .iter()
            .find(|e| e.feature == feature)
            .map_or(0.0, |e| e.share)
    }

    pub fn top(&self, k: usize) -> impl Iterator<Item = &FeatureImportance> {
        self.entries.iter().take(k)
    }
}

/// Split-weight importance: each internal node adds its sample count to the
/// weight of its split feature.
pub fn feature_importance<'a>(
    trees: impl IntoIterator<Item = &'a CausalTree>,
) -> FeatureImportanceReport {
    let mut weights: BTreeMap<&str, u64> = BTreeMap::new();
    for tree in trees {
        for node in tree.root.internal_nodes() {
            if let Some(split) = &node.split {
                *weights.entry(split.feature.as_str()).or_default() += node.samples as u64;
            }
        }
    }
    let total: u64 = weights.values().sum();
    if total == 0 {
        log::warn!("no splits in any tree; feature importance is empty");
        return FeatureImportanceReport::default();
    }
    let mut entries: Vec<FeatureImportance> = weights
        .into_iter()
        .map(|(f, w)| FeatureImportance {
            feature: f.to_string(),
            total_weight: w,
            share: w as f64 / total as f64,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.total_weight
            .cmp(&a.total_weight)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    FeatureImportanceReport { entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapWeighting {
    #[default]
    Unweighted,
    /// Weight each split's gap by the node sample count.
    SampleWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectGap {
    pub feature: String,
    pub n_splits: usize,
    pub mean_gap: f64,
    /// Normal-approximation 95% interval; absent with fewer than 2 splits.
    pub ci95: Option<(f64, f64)>,
}

/// Mean of `tau(left) - tau(right)` over every split on `feature`, where the
/// left child holds `feature >= threshold`. `None` when the feature is never
/// split on.
pub fn effect_gap<'a>(
    trees: impl IntoIterator<Item = &'a CausalTree>,
    feature: &str,
    weighting: GapWeighting,
) -> Option<EffectGap> {
    let mut gaps = Vec::new();
    let mut weights = Vec::new();
    for tree in trees {
        for node in tree.root.internal_nodes() {
            let (Some(split), Some((l, r))) = (&node.split, node.children()) else {
                continue;
            };
            if split.feature == feature {
                gaps.push(l.effect.tau - r.effect.tau);
                weights.push(match weighting {
                    GapWeighting::Unweighted => 1.0,
                    GapWeighting::SampleWeighted => node.samples as f64,
                });
            }
        }
    }
    if gaps.is_empty() {
        return None;
    }
    let sw: f64 = weights.iter().sum();
    let mean_gap = gaps.iter().zip(&weights).map(|(g, w)| g * w).sum::<f64>() / sw;
    // Kish effective size; equals the split count when unweighted.
    let n_eff = sw * sw / weights.iter().map(|w| w * w).sum::<f64>();
    let ci95 = (gaps.len() >= 2).then(|| {
        let ss: f64 = gaps
            .iter()
            .zip(&weights)
            .map(|(g, w)| w * (g - mean_gap).powi(2))
            .sum();
        let var = ss / sw * n_eff / (n_eff - 1.0);
        let half = 1.96 * var.sqrt() / n_eff.sqrt();
        (mean_gap - half, mean_gap + half)
    });
    Some(EffectGap {
        feature: feature.to_string(),
        n_splits: gaps.len(),
        mean_gap,
        ci95,
    })
}

/// Effect gaps for the `top` most important features, in importance order.
pub fn effect_gap_report(
    trees: &[CausalTree],
    importance: &FeatureImportanceReport,
    top: usize,
    weighting: GapWeighting,
) -> Vec<EffectGap> {
    importance
        .top(top)
        .filter_map(|fi| effect_gap(trees, &fi.feature, weighting))
        .collect()
}
