//! CSV report writers. Floats are written with 9 significant digits; a
//! missing value is an empty field. [`COLUMN_MANIFEST`] documents every
//! layout and is written next to the reports as `reports_manifest.json`.

use std::io::Write;

use serde::Serialize;

use crate::format::{fmt_g9, fmt_opt};
use crate::ingestion::ChampionCatalog;

use super::{
    AnalysisError, AteSeries, EffectGap, FeatureImportanceReport, HeatmapTable, WinRateSeries,
};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReportLayout {
    pub file: &'static str,
    pub columns: &'static [&'static str],
    pub description: &'static str,
}

pub const ATE_SERIES_COLUMNS: &[&str] = &[
    "control_patch",
    "treated_patch",
    "tau",
    "se",
    "p",
    "n_before",
    "n_after",
    "mean_before",
    "mean_after",
];
pub const WIN_RATE_COLUMNS: &[&str] = &[
    "champion",
    "champion_name",
    "patch",
    "wins",
    "games",
    "rate",
];
pub const HEATMAP_COLUMNS: &[&str] = &[
    "bin",
    "bin_label",
    "bin_share",
    "column",
    "count",
    "value",
    "se",
    "p",
];
pub const IMPORTANCE_COLUMNS: &[&str] = &["rank", "feature", "total_weight", "share"];
pub const EFFECT_GAP_COLUMNS: &[&str] =
    &["feature", "n_splits", "mean_gap", "ci95_low", "ci95_high"];

pub const COLUMN_MANIFEST: &[ReportLayout] = &[
    ReportLayout {
        file: "ate_series.csv",
        columns: ATE_SERIES_COLUMNS,
        description: "one row per consecutive patch pair; empty tau/se/p when an arm has < 2 rows",
    },
    ReportLayout {
        file: "win_rates.csv",
        columns: WIN_RATE_COLUMNS,
        description: "one row per (champion, patch) with at least one game",
    },
    ReportLayout {
        file: "heatmap_<feature>.csv",
        columns: HEATMAP_COLUMNS,
        description: "long format, one row per (bin, column); column is a patch (mean mode) or pair (ate mode); se/p only in ate mode; empty value = empty cell",
    },
    ReportLayout {
        file: "feature_importance.csv",
        columns: IMPORTANCE_COLUMNS,
        description: "features by descending split weight",
    },
    ReportLayout {
        file: "effect_gaps.csv",
        columns: EFFECT_GAP_COLUMNS,
        description: "most important features in importance order; CI empty with fewer than 2 splits",
    },
];

pub fn write_manifest<W: Write>(w: W) -> Result<(), AnalysisError> {
    serde_json::to_writer_pretty(w, COLUMN_MANIFEST).map_err(std::io::Error::from)?;
    Ok(())
}

pub fn write_ate_series_csv<W: Write>(series: &AteSeries, w: W) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ATE_SERIES_COLUMNS)?;
    for c in &series.cells {
        let e = c.estimate;
        out.write_record([
            c.pair.control.to_string(),
            c.pair.treated.to_string(),
            fmt_opt(e.map(|e| e.tau)),
            fmt_opt(e.map(|e| e.se)),
            fmt_opt(e.map(|e| e.p_value)),
            c.n_before.to_string(),
            c.n_after.to_string(),
            fmt_opt(e.map(|e| e.mean_control)),
            fmt_opt(e.map(|e| e.mean_treated)),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_win_rates_csv<W: Write>(
    series: &[WinRateSeries],
    catalog: &ChampionCatalog,
    w: W,
) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(WIN_RATE_COLUMNS)?;
    for s in series {
        let name = catalog.display_name(&s.champion);
        for c in &s.cells {
            out.write_record([
                s.champion.to_string(),
                name.to_string(),
                c.patch.to_string(),
                c.wins.to_string(),
                c.games.to_string(),
                fmt_g9(c.rate),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_heatmap_csv<W: Write>(table: &HeatmapTable, w: W) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEATMAP_COLUMNS)?;
    for (b, row) in table.cells.iter().enumerate() {
        for (col, cell) in table.columns.iter().zip(row) {
            out.write_record([
                b.to_string(),
                table.bin_labels[b].clone(),
                fmt_g9(table.bin_shares[b]),
                col.clone(),
                cell.count.to_string(),
                fmt_opt(cell.value),
                fmt_opt(cell.estimate.map(|e| e.se)),
                fmt_opt(cell.estimate.map(|e| e.p_value)),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_feature_importance_csv<W: Write>(
    report: &FeatureImportanceReport,
    w: W,
) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(IMPORTANCE_COLUMNS)?;
    for (i, e) in report.entries.iter().enumerate() {
        out.write_record([
            (i + 1).to_string(),
            e.feature.clone(),
            e.total_weight.to_string(),
            fmt_g9(e.share),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_effect_gaps_csv<W: Write>(gaps: &[EffectGap], w: W) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EFFECT_GAP_COLUMNS)?;
    for g in gaps {
        out.write_record([
            g.feature.clone(),
            g.n_splits.to_string(),
            fmt_g9(g.mean_gap),
            fmt_opt(g.ci95.map(|c| c.0)),
            fmt_opt(g.ci95.map(|c| c.1)),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_reports_have_headers() {
        let mut buf = Vec::new();
        write_feature_importance_csv(&FeatureImportanceReport::default(), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rank,feature,total_weight,share\n"
        );
        let mut buf = Vec::new();
        write_effect_gaps_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "feature,n_splits,mean_gap,ci95_low,ci95_high\n"
        );
    }

    #[test]
    fn gap_row_without_ci() {
        let g = EffectGap {
            feature: "x1".into(),
            n_splits: 1,
            mean_gap: 1.0 / 3.0,
            ci95: None,
        };
        let mut buf = Vec::new();
        write_effect_gaps_csv(&[g], &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .ends_with("x1,1,0.333333333,,\n"));
    }
}
