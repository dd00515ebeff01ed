//! Heterogeneous treatment effects of versioned software patches on match
//! telemetry.
//!
//! The pipeline runs bottom-up:
//!
//! - [`ingestion`] loads and validates `matches.csv`, `player_matches.csv`
//!   and `champions.csv`, and builds the patch timeline.
//! - [`features`] derives per-(user, match) history features: sessions,
//!   idle time, cumulative and mean statistics before the match.
//! - [`frames`] turns a consecutive patch pair into a treatment frame
//!   (`x`, `w`, `y`) at team or player level.
//! - [`tree`] fits causal trees with significance-gated, variance-reducing
//!   splits and a held-out validation check.
//! - [`analysis`] computes ATE and win-rate series, heatmaps, feature
//!   importance and effect gaps.
//! - [`synthetic`] generates frames with known effects for verification.
//! - [`cli`] wires the stages into the `patchtree` command.

pub mod analysis;
pub mod cli;
pub mod features;
pub mod format;
pub mod frames;
pub mod ingestion;
pub mod synthetic;
pub mod tree;

pub use frames::TreatmentFrame;
pub use tree::{estimate_effect, fit, CausalTree, EffectEstimate, TreeConfig};
