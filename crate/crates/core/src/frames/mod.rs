//! Treatment frames: unit tables of features `x`, binary treatment `w`
//! (played on the later patch) and outcome `y`.

mod io;
mod player;
mod team;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::features::FeatureKind;
use crate::ingestion::PatchPair;

pub use io::{read_frame_csv, write_frame_csv, FrameSidecar};
pub use player::{
    batch_frames, build_player_frame, BatchItem, PanelRow, PlayerPanel, SkippedFrame,
};
pub use team::{build_team_frame, team_feature_schema};

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("degenerate treatment arm: {n_treated} treated, {n_control} control")]
    DegenerateArm { n_treated: usize, n_control: usize },
    #[error("empty frame: {0}")]
    Empty(String),
    #[error("unknown champion `{0}`")]
    UnknownChampion(String),
    #[error("patch {0} not present in the data")]
    MissingPatch(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("frame parse error at line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    BinaryWin,
    CountKills,
    Continuous,
}

/// Labels of the control (`w = 0`) and treated (`w = 1`) conditions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreatmentMeta {
    pub control: String,
    pub treated: String,
}

impl From<PatchPair> for TreatmentMeta {
    fn from(p: PatchPair) -> Self {
        Self {
            control: p.control.to_string(),
            treated: p.treated.to_string(),
        }
    }
}

/// Column-major `(x, w, y)` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentFrame {
    schema: Vec<FeatureSpec>,
    columns: Vec<Vec<f64>>,
    treated: Vec<bool>,
    outcome: Vec<f64>,
    pub outcome_kind: OutcomeKind,
    pub meta: TreatmentMeta,
}

impl TreatmentFrame {
    pub fn new(
        schema: Vec<FeatureSpec>,
        outcome_kind: OutcomeKind,
        meta: TreatmentMeta,
    ) -> Result<Self, FrameError> {
        let mut names: Vec<&str> = schema.iter().map(|f| f.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(FrameError::Schema("duplicate feature name".into()));
        }
        if names.iter().any(|n| *n == "w" || *n == "y" || n.is_empty()) {
            return Err(FrameError::Schema(
                "feature names must be non-empty and not `w`/`y`".into(),
            ));
        }
        let columns = vec![Vec::new(); schema.len()];
        Ok(Self {
            schema,
            columns,
            treated: Vec::new(),
            outcome: Vec::new(),
            outcome_kind,
            meta,
        })
    }

    pub fn push_row(&mut self, x: &[f64], treated: bool, y: f64) -> Result<(), FrameError> {
        if x.len() != self.schema.len() {
            return Err(FrameError::Schema(format!(
                "row has {} values, schema has {} features",
                x.len(),
                self.schema.len()
            )));
        }
        if let Some(bad) = x.iter().chain(std::iter::once(&y)).find(|v| !v.is_finite()) {
            return Err(FrameError::Schema(format!("non-finite value {bad}")));
        }
        for (col, v) in self.columns.iter_mut().zip(x) {
            col.push(*v);
        }
        self.treated.push(treated);
        self.outcome.push(y);
        Ok(())
    }

    pub fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema.iter().map(|f| f.name.clone()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|f| f.name == name)
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn treatment(&self) -> &[bool] {
        &self.treated
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcome
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// `(n_treated, n_control)`.
    pub fn arm_sizes(&self) -> (usize, usize) {
        let t = self.treated.iter().filter(|w| **w).count();
        (t, self.treated.len() - t)
    }

    /// Both arms hold at least `max(min_arm, 2)` rows.
    pub fn check_fittable(&self, min_arm: usize) -> Result<(), FrameError> {
        let (n_treated, n_control) = self.arm_sizes();
        let floor = min_arm.max(2);
        if n_treated < floor || n_control < floor {
            return Err(FrameError::DegenerateArm {
                n_treated,
                n_control,
            });
        }
        Ok(())
    }

    /// Same rows with treated and control relabeled.
    pub fn swap_arms(&self) -> Self {
        let mut out = self.clone();
        out.treated.iter_mut().for_each(|w| *w = !*w);
        std::mem::swap(&mut out.meta.control, &mut out.meta.treated);
        out
    }

    /// Same rows with every outcome transformed by `f`.
    pub fn map_outcomes(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.outcome.iter_mut().for_each(|y| *y = f(*y));
        out.outcome_kind = OutcomeKind::Continuous;
        out
    }

    /// Same features and outcomes with a new treatment vector.
    pub fn with_treatment(&self, treated: Vec<bool>) -> Result<Self, FrameError> {
        if treated.len() != self.n_rows() {
            return Err(FrameError::Schema(
                "treatment length differs from row count".into(),
            ));
        }
        let mut out = self.clone();
        out.treated = treated;
        Ok(out)
    }

    /// SHA-256 of the frame's CSV serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        write_frame_csv(self, &mut buf).expect("writing to memory");
        hex::encode(Sha256::digest(&buf))
    }
}
