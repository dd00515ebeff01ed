use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{GapWeighting, HeatmapMode, Outcome};
use crate::features::{BinEdges, BinningSpec, DEFAULT_SESSION_GAP_SECS};
use crate::tree::TreeConfig;

use super::CliError;

/// Input files. `catalog` is optional; without it team frames cannot be
/// built and champions are shown by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub matches: Option<PathBuf>,
    pub player_matches: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub ate_series: bool,
    pub win_rates: bool,
    pub heatmaps: bool,
    pub importance: bool,
    pub effect_gaps: bool,
    pub outcome: Outcome,
    pub heatmap_mode: HeatmapMode,
    pub gap_weighting: GapWeighting,
    /// Effect gaps are reported for this many most important features.
    pub top_features: usize,
    /// Win-rate series for this many most played champions.
    pub win_rate_champions: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            ate_series: true,
            win_rates: true,
            heatmaps: true,
            importance: true,
            effect_gaps: true,
            outcome: Outcome::Kills,
            heatmap_mode: HeatmapMode::MeanOutcome,
            gap_weighting: GapWeighting::Unweighted,
            top_features: 10,
            win_rate_champions: 3,
        }
    }
}

/// One JSON document configuring every subcommand. Command-line flags
/// override the matching keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub max_reject_rate: f64,
    /// Keep only ranked 5v5 matches when building frames and reports.
    /// History features always use every valid match.
    pub competitive_only: bool,
    pub session_gap_secs: i64,
    pub top_k_champions: usize,
    pub tree: TreeConfig,
    /// Significance level for trimmed trees written by `report`.
    pub display_alpha: Option<f64>,
    pub binnings: Vec<BinningSpec>,
    pub analysis: AnalysisConfig,
    /// Directory `analyze` and `report` read trees from; defaults to
    /// `<out>/trees`.
    pub trees_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: InputPaths::default(),
            max_reject_rate: 0.01,
            competitive_only: true,
            session_gap_secs: DEFAULT_SESSION_GAP_SECS,
            top_k_champions: 25,
            tree: TreeConfig::default(),
            display_alpha: None,
            binnings: vec![
                BinningSpec::quartiles("meanKillsAtStart", true),
                BinningSpec {
                    feature: "matchIndexInSession".into(),
                    special_zero_bin: false,
                    edges: BinEdges::Thresholds(vec![1.0, 2.0, 3.0, 5.0]),
                    include_missing: true,
                },
            ],
            analysis: AnalysisConfig::default(),
            trees_dir: None,
            out: PathBuf::from("out"),
            seed: 0,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Tree settings with the run seed applied.
    pub fn tree_config(&self) -> TreeConfig {
        self.tree.clone().with_seed(self.seed)
    }

    pub fn trees_dir(&self) -> PathBuf {
        self.trees_dir
            .clone()
            .unwrap_or_else(|| self.out.join("trees"))
    }

    pub fn display_alpha(&self) -> f64 {
        self.display_alpha.unwrap_or(self.tree.alpha)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.tree_config()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.max_reject_rate) {
            return Err(CliError::Usage(format!(
                "max_reject_rate {} outside [0, 1]",
                self.max_reject_rate
            )));
        }
        if self.session_gap_secs <= 0 {
            return Err(CliError::Usage("session_gap_secs must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        for b in &self.binnings {
            b.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(())
    }

    /// The telemetry inputs, which must exist.
    pub fn telemetry_paths(&self) -> Result<(&Path, &Path), CliError> {
        let need = |p: &Option<PathBuf>, key: &str| -> Result<PathBuf, CliError> {
            let p = p
                .clone()
                .ok_or_else(|| CliError::Usage(format!("config key inputs.{key} is required")))?;
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "input {} does not exist",
                    p.display()
                )));
            }
            Ok(p)
        };
        need(&self.inputs.matches, "matches")?;
        need(&self.inputs.player_matches, "player_matches")?;
        if let Some(c) = &self.inputs.catalog {
            if !c.exists() {
                return Err(CliError::Usage(format!(
                    "input {} does not exist",
                    c.display()
                )));
            }
        }
        Ok((
            self.inputs.matches.as_deref().unwrap(),
            self.inputs.player_matches.as_deref().unwrap(),
        ))
    }
}
