use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::features::{percentile_bins, BinningSpec, PlayerDerivedFeatures};
use crate::ingestion::{PatchTimeline, PatchVersion, TelemetryTables};
use crate::tree::{estimate_effect, EffectEstimate};

use super::{AnalysisError, Outcome};

/// One observation for a heatmap: its patch, binned-feature value and outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapRow {
    pub patch: PatchVersion,
    pub value: Option<f64>,
    pub outcome: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMode {
    #[default]
    MeanOutcome,
    Ate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    /// Rows contributing to the cell (both arms in ATE mode).
    pub count: usize,
    /// Mean outcome (mean mode) or tau (ATE mode); `None` for empty cells.
    pub value: Option<f64>,
    /// ATE mode only.
    pub estimate: Option<EffectEstimate>,
    /// ATE mode only: raw arm sizes and means, kept even when the estimate
    /// is missing.
    pub arms: Option<ArmCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmCell {
    pub n_control: usize,
    pub n_treated: usize,
    pub mean_control: Option<f64>,
    pub mean_treated: Option<f64>,
}

/// Bins × columns table. Columns are patches in mean mode and consecutive
/// patch pairs (`4.6-4.7`) in ATE mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapTable {
    pub feature: String,
    pub mode: HeatmapMode,
    pub bin_labels: Vec<String>,
    pub bin_shares: Vec<f64>,
    pub columns: Vec<String>,
    /// `cells[bin][column]`.
    pub cells: Vec<Vec<HeatmapCell>>,
}

impl HeatmapTable {
    pub fn total_count(&self) -> usize {
        self.cells.iter().flatten().map(|c| c.count).sum()
    }

    /// Recombines the per-bin ATE cells of column `col` with arm-specific
    /// population weights (`n_arm,bin / n_arm`). When the bins partition the
    /// rows this equals the unbinned ATE for that pair.
    pub fn pooled_ate(&self, col: usize) -> Option<f64> {
        let arms: Vec<&ArmCell> = self
            .cells
            .iter()
            .filter_map(|r| r[col].arms.as_ref())
            .collect();
        let n1: usize = arms.iter().map(|a| a.n_treated).sum();
        let n0: usize = arms.iter().map(|a| a.n_control).sum();
        if n1 == 0 || n0 == 0 {
            return None;
        }
        let total = |n: fn(&ArmCell) -> usize, m: fn(&ArmCell) -> Option<f64>| {
            arms.iter()
                .map(|a| n(a) as f64 * m(a).unwrap_or(0.0))
                .sum::<f64>()
        };
        let m1 = total(|a| a.n_treated, |a| a.mean_treated) / n1 as f64;
        let m0 = total(|a| a.n_control, |a| a.mean_control) / n0 as f64;
        Some(m1 - m0)
    }
}

/// Joins each player-match with one derived feature (missingness preserved)
/// and an outcome.
pub fn heatmap_rows(
    tables: &TelemetryTables,
    features: &[PlayerDerivedFeatures],
    feature: &str,
    outcome: Outcome,
) -> Result<Vec<HeatmapRow>, AnalysisError> {
    let by_match = crate::ingestion::index_matches(&tables.matches);
    let feats: HashMap<(&str, &str), &PlayerDerivedFeatures> = features
        .iter()
        .map(|f| ((f.match_id.as_str(), f.user_id.as_str()), f))
        .collect();
    let mut rows = Vec::new();
    for pm in &tables.player_matches {
        let (Some(m), Some(f)) = (
            by_match.get(pm.match_id.as_str()),
            feats.get(&(pm.match_id.as_str(), pm.user_id.as_str())),
        ) else {
            continue;
        };
        let value = f
            .value(feature)
            .ok_or_else(|| AnalysisError::UnknownFeature(feature.to_string()))?;
        rows.push(HeatmapRow {
            patch: m.patch,
            value,
            outcome: outcome.value(pm, m),
        });
    }
    Ok(rows)
}

fn mean(ys: &[f64]) -> Option<f64> {
    (!ys.is_empty()).then(|| ys.iter().sum::<f64>() / ys.len() as f64)
}

/// Bins the pooled rows by `binning`, then tabulates per patch (mean mode)
/// or per consecutive pair (ATE mode). Rows on patches outside the timeline
/// are ignored.
pub fn heatmap_table(
    rows: &[HeatmapRow],
    binning: &BinningSpec,
    timeline: &PatchTimeline,
    mode: HeatmapMode,
) -> Result<HeatmapTable, AnalysisError> {
    let in_timeline: Vec<&HeatmapRow> =
        rows.iter().filter(|r| timeline.contains(r.patch)).collect();
    let values: Vec<Option<f64>> = in_timeline.iter().map(|r| r.value).collect();
    let bins = percentile_bins(&values, binning)?;
    let n_bins = bins.n_bins();

    // outcomes[bin][patch position]
    let versions: Vec<PatchVersion> = timeline.versions().collect();
    let pos: HashMap<PatchVersion, usize> =
        versions.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut outcomes = vec![vec![Vec::<f64>::new(); versions.len()]; n_bins];
    for (row, bin) in in_timeline.iter().zip(&bins.assignments) {
        if let Some(b) = bin {
            outcomes[*b][pos[&row.patch]].push(row.outcome);
        }
    }

    let (columns, cells) = match mode {
        HeatmapMode::MeanOutcome => {
            let cells = outcomes
                .iter()
                .map(|per_patch| {
                    per_patch
                        .iter()
                        .map(|ys| HeatmapCell {
                            count: ys.len(),
                            value: mean(ys),
                            estimate: None,
                            arms: None,
                        })
                        .collect()
                })
                .collect();
            (versions.iter().map(ToString::to_string).collect(), cells)
        }
        HeatmapMode::Ate => {
            if versions.len() < 2 {
                return Err(AnalysisError::TooFewPatches(versions.len()));
            }
            let cells = outcomes
                .iter()
                .map(|per_patch| {
                    per_patch
                        .windows(2)
                        .map(|w| {
                            let estimate = estimate_effect(&w[1], &w[0]).ok();
                            HeatmapCell {
                                count: w[0].len() + w[1].len(),
                                value: estimate.map(|e| e.tau),
                                estimate,
                                arms: Some(ArmCell {
                                    n_control: w[0].len(),
                                    n_treated: w[1].len(),
                                    mean_control: mean(&w[0]),
                                    mean_treated: mean(&w[1]),
                                }),
                            }
                        })
                        .collect()
                })
                .collect();
            (
                timeline.pairs().iter().map(ToString::to_string).collect(),
                cells,
            )
        }
    };

    Ok(HeatmapTable {
        feature: binning.feature.clone(),
        mode,
        bin_labels: bins.labels(),
        bin_shares: bins.shares.clone(),
        columns,
        cells,
    })
}
