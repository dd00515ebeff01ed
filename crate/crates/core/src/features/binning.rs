use serde::{Deserialize, Serialize};

use super::FeatureError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinEdges {
    /// Percentile cut points in (0, 100), computed over the non-zero values.
    Percentiles(Vec<f64>),
    /// Explicit cut values in feature units.
    Thresholds(Vec<f64>),
}

impl BinEdges {
    fn raw(&self) -> &[f64] {
        match self {
            BinEdges::Percentiles(v) | BinEdges::Thresholds(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub feature: String,
    /// Values equal to 0 get their own bin (bin 0).
    pub special_zero_bin: bool,
    pub edges: BinEdges,
    /// Whether missing values join the zero bin. When false, missing values
    /// stay unbinned.
    #[serde(default = "default_true")]
    pub include_missing: bool,
}

fn default_true() -> bool {
    true
}

impl BinningSpec {
    pub fn quartiles(feature: impl Into<String>, special_zero_bin: bool) -> Self {
        Self {
            feature: feature.into(),
            special_zero_bin,
            edges: BinEdges::Percentiles(vec![25.0, 50.0, 75.0]),
            include_missing: true,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let edges = self.edges.raw();
        let bad = |why: &str| {
            Err(FeatureError::InvalidBinning(format!(
                "{}: {why}",
                self.feature
            )))
        };
        if edges.iter().any(|e| !e.is_finite()) {
            return bad("edges must be finite");
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return bad("edges must be strictly increasing");
        }
        if let BinEdges::Percentiles(p) = &self.edges {
            if p.iter().any(|&q| q <= 0.0 || q >= 100.0) {
                return bad("percentiles must lie in (0, 100)");
            }
        }
        Ok(())
    }
}

/// Result of binning one feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    /// Bin per input value; `None` for values left out.
    pub assignments: Vec<Option<usize>>,
    /// Realized cut values, after duplicate collapse.
    pub edges: Vec<f64>,
    pub special_zero_bin: bool,
    pub counts: Vec<usize>,
    /// Population share per bin over all binned values.
    pub shares: Vec<f64>,
}

impl Binning {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Human-readable bin labels, e.g. `=0`, `<2.5`, `[2.5,4)`, `>=4`.
    pub fn labels(&self) -> Vec<String> {
        let g = crate::format::fmt_g9;
        let mut out = Vec::new();
        if self.special_zero_bin {
            out.push("=0".to_string());
        }
        let n = self.edges.len();
        if n == 0 {
            out.push("all".to_string());
            return out;
        }
        out.push(format!("<{}", g(self.edges[0])));
        for w in self.edges.windows(2) {
            out.push(format!("[{},{})", g(w[0]), g(w[1])));
        }
        out.push(format!(">={}", g(self.edges[n - 1])));
        out
    }
}

/// Linear-interpolation percentile of sorted data (`p` in 0..=100).
pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Assigns each value to a bin. With `special_zero_bin`, zeros (and missing
/// values when `include_missing`) go to bin 0 and percentiles are computed
/// over the remaining values only. A value equal to a cut goes to the upper bin.
pub fn percentile_bins(
    values: &[Option<f64>],
    spec: &BinningSpec,
) -> Result<Binning, FeatureError> {
    spec.validate()?;
    let in_zero_bin = |v: Option<f64>| {
        spec.special_zero_bin && v.is_none_or(|x| x == 0.0) && (v.is_some() || spec.include_missing)
    };

    let mut rest: Vec<f64> = values
        .iter()
        .filter(|v| !in_zero_bin(**v))
        .filter_map(|v| *v)
        .collect();
    rest.sort_by(f64::total_cmp);

    let mut edges: Vec<f64> = match &spec.edges {
        BinEdges::Thresholds(t) => t.clone(),
        BinEdges::Percentiles(_) if rest.is_empty() => {
            log::warn!(
                "{}: no values outside the zero bin; percentile edges dropped",
                spec.feature
            );
            Vec::new()
        }
        BinEdges::Percentiles(p) => p.iter().map(|&q| percentile_sorted(&rest, q)).collect(),
    };
    let before = edges.len();
    edges.dedup();
    if edges.len() < before {
        log::warn!(
            "{}: {} duplicate bin edges collapsed (too few distinct values)",
            spec.feature,
            before - edges.len()
        );
    }

    let offset = usize::from(spec.special_zero_bin);
    let n_bins = offset + edges.len() + 1;
    let mut counts = vec![0usize; n_bins];
    let assignments: Vec<Option<usize>> = values
        .iter()
        .map(|&v| {
            let bin = if in_zero_bin(v) {
                Some(0)
            } else {
                v.map(|x| offset + edges.partition_point(|&e| e <= x))
            };
            if let Some(b) = bin {
                counts[b] += 1;
            }
            bin
        })
        .collect();
    let total: usize = counts.iter().sum();
    let shares = counts
        .iter()
        .map(|&c| {
            if total == 0 {
                0.0
            } else {
                c as f64 / total as f64
            }
        })
        .collect();
    Ok(Binning {
        assignments,
        edges,
        special_zero_bin: spec.special_zero_bin,
        counts,
        shares,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn zero_bin_and_median_split() {
        let spec = BinningSpec {
            feature: "f".into(),
            special_zero_bin: true,
            edges: BinEdges::Percentiles(vec![50.0]),
            include_missing: true,
        };
        let b = percentile_bins(&vals(&[0.0, 0.0, 1.0, 2.0, 3.0, 4.0]), &spec).unwrap();
        let got: Vec<_> = b.assignments.iter().map(|a| a.unwrap()).collect();
        assert_eq!(got, [0, 0, 1, 1, 2, 2]);
        assert_eq!(b.edges, [2.5]);
        assert_eq!(b.labels(), ["=0", "<2.5", ">=2.5"]);
    }

    #[test]
    fn all_zero_goes_to_zero_bin() {
        let b = percentile_bins(&vals(&[0.0; 5]), &BinningSpec::quartiles("f", true)).unwrap();
        assert!(b.assignments.iter().all(|a| *a == Some(0)));
        assert_eq!(b.shares[0], 1.0);
    }

    #[test]
    fn quartiles_equal_shares() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let b = percentile_bins(&vals(&v), &BinningSpec::quartiles("f", false)).unwrap();
        assert_eq!(b.counts, [25, 25, 25, 25]);
    }

    #[test]
    fn missing_handling() {
        let spec = BinningSpec {
            include_missing: false,
            ..BinningSpec::quartiles("f", true)
        };
        let b = percentile_bins(&[None, Some(0.0), Some(3.0)], &spec).unwrap();
        assert_eq!(b.assignments[0], None);
        assert_eq!(b.assignments[1], Some(0));
        let spec = BinningSpec::quartiles("f", true);
        let b = percentile_bins(&[None, Some(3.0)], &spec).unwrap();
        assert_eq!(b.assignments[0], Some(0));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let b = percentile_bins(
            &vals(&[1.0, 1.0, 1.0, 1.0, 5.0]),
            &BinningSpec::quartiles("f", false),
        )
        .unwrap();
        assert_eq!(b.edges, [1.0]);
        assert_eq!(b.counts, [0, 5]);
    }

    #[test]
    fn thresholds_and_validation() {
        let spec = BinningSpec {
            feature: "gap".into(),
            special_zero_bin: true,
            edges: BinEdges::Thresholds(vec![60.0, 600.0]),
            include_missing: false,
        };
        let b = percentile_bins(&vals(&[0.0, 30.0, 60.0, 1000.0]), &spec).unwrap();
        assert_eq!(b.assignments, [Some(0), Some(1), Some(2), Some(3)]);
        let bad = BinningSpec {
            edges: BinEdges::Thresholds(vec![2.0, 1.0]),
            ..spec.clone()
        };
        assert!(percentile_bins(&[], &bad).is_err());
        let bad = BinningSpec {
            edges: BinEdges::Percentiles(vec![100.0]),
            ..spec
        };
        assert!(bad.validate().is_err());
    }
}
