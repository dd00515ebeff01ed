//! Derived analyses over ingested data and fitted trees: ATE and win-rate
//! series, correlations, binned heatmaps, split-weight feature importance
//! and effect gaps. Report CSV writers live in [`report`].

mod heatmap;
mod importance;
pub mod report;
mod series;

pub use heatmap::{
    heatmap_rows, heatmap_table, ArmCell, HeatmapCell, HeatmapMode, HeatmapRow, HeatmapTable,
};
pub use importance::{
    effect_gap, effect_gap_report, feature_importance, EffectGap, FeatureImportance,
    FeatureImportanceReport, GapWeighting,
};
pub use series::{
    ate_series, correlate, pearson, win_rate_series, AteCell, AteSeries, Correlation, Outcome,
    WinRateCell, WinRateSeries,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("need at least 2 patches, timeline has {0}")]
    TooFewPatches(usize),
    #[error("correlation needs at least 3 common points, got {0}")]
    TooFewPoints(usize),
    #[error("undefined correlation: a series has zero variance")]
    UndefinedCorrelation,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
