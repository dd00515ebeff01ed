//! The `patchtree` command line: `ingest`, `features`, `fit`, `analyze`,
//! `synth` and `report`, driven by one JSON [`RunConfig`].
//!
//! Flags override config keys, which override defaults. Every invocation
//! writes `manifest_<command>.json` into the output directory, failures
//! included. Exit codes: 0 success, 2 usage or schema error, 3 data-quality
//! breach (reject rate), 4 internal invariant violation.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use crate::analysis::AnalysisError;
use crate::features::FeatureError;
use crate::frames::FrameError;
use crate::ingestion::{IngestError, PatchPair};
use crate::synthetic::SynthError;
use crate::tree::TreeError;

pub use config::{AnalysisConfig, InputPaths, RunConfig};
pub use manifest::{sha256_file, RunManifest, SkippedEntry, StageTiming};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA_QUALITY: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ingest(IngestError::RejectRateExceeded { .. }) => EXIT_DATA_QUALITY,
            CliError::Tree(TreeError::Invariant(_)) => EXIT_INVARIANT,
            _ => EXIT_USAGE,
        }
    }
}

/// What `fit` builds trees for.
#[derive(Debug, Clone, PartialEq)]
pub enum FitScope {
    /// Team-composition frame for one patch pair.
    Team(PatchPair),
    /// Player frame for one champion (id or name) and patch pair.
    Player(String, PatchPair),
    /// Every top-k champion × consecutive pair.
    Batch,
    /// A frame CSV written by `synth` or a previous `fit`, with its sidecar
    /// JSON next to it.
    Frame(PathBuf),
}

impl FromStr for FitScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let pair = |p: &str| p.parse::<PatchPair>().map_err(|e| e.to_string());
        if s == "batch" {
            Ok(FitScope::Batch)
        } else if let Some(p) = s.strip_prefix("team:") {
            Ok(FitScope::Team(pair(p)?))
        } else if let Some(rest) = s.strip_prefix("player:") {
            let (champ, p) = rest
                .rsplit_once(':')
                .ok_or("expected player:<champion>:<pair>")?;
            Ok(FitScope::Player(champ.to_string(), pair(p)?))
        } else if let Some(p) = s.strip_prefix("frame:") {
            Ok(FitScope::Frame(PathBuf::from(p)))
        } else {
            Err(format!(
                "unknown scope `{s}` (team:<pair>, player:<champion>:<pair>, batch, frame:<path>)"
            ))
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "patchtree",
    version,
    about = "Causal trees for software-patch effects on match telemetry"
)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub matches: Option<PathBuf>,
    #[arg(long, global = true)]
    pub player_matches: Option<PathBuf>,
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the telemetry tables and write the reject report.
    Ingest,
    /// Write per-(user, match) derived features.
    Features,
    /// Fit causal trees.
    Fit {
        /// team:<pair>, player:<champion>:<pair>, batch or frame:<path>.
        #[arg(long, default_value = "batch")]
        scope: FitScope,
    },
    /// Write ATE series, win rates, heatmaps, feature importance and effect gaps.
    Analyze,
    /// Generate a synthetic frame and its oracle from a spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Write trimmed renderings of fitted trees.
    Report {
        /// Significance level for trimming; defaults to the config's.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Features => "features",
            Command::Fit { .. } => "fit",
            Command::Analyze => "analyze",
            Command::Synth { .. } => "synth",
            Command::Report { .. } => "report",
        }
    }
}

impl Cli {
    /// Merges flags over the config file over defaults.
    pub fn effective_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(p) = &self.matches {
            cfg.inputs.matches = Some(p.clone());
        }
        if let Some(p) = &self.player_matches {
            cfg.inputs.player_matches = Some(p.clone());
        }
        if let Some(p) = &self.catalog {
            cfg.inputs.catalog = Some(p.clone());
        }
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    let argv = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    commands::execute(&cli, argv)
}
