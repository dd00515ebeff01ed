use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{IngestError, MatchRecord};

/// A game version `major.minor`, ordered numerically (4.10 > 4.9).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchVersion {
    pub major: u32,
    pub minor: u32,
}

impl PatchVersion {
    pub const fn new(major: u32, minor: u32) -> Self {
        Self { major, minor }
    }
}

impl fmt::Display for PatchVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.major, self.minor)
    }
}

impl FromStr for PatchVersion {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::InvalidPatch(s.to_string());
        let (major, minor) = s.trim().split_once('.').ok_or_else(bad)?;
        let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
        if !digits(major) || !digits(minor) {
            return Err(bad());
        }
        Ok(Self {
            major: major.parse().map_err(|_| bad())?,
            minor: minor.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for PatchVersion {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PatchVersion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A consecutive version pair: matches on `control` are untreated, matches
/// on `treated` received the patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PatchPair {
    pub control: PatchVersion,
    pub treated: PatchVersion,
}

impl PatchPair {
    pub fn new(control: PatchVersion, treated: PatchVersion) -> Self {
        Self { control, treated }
    }
}

impl fmt::Display for PatchPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.control, self.treated)
    }
}

impl FromStr for PatchPair {
    type Err = IngestError;

    /// Parses `4.11-4.12`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| IngestError::InvalidPatch(s.to_string()))?;
        Ok(Self::new(a.parse()?, b.parse()?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub version: PatchVersion,
    pub first_seen: i64,
}

/// Distinct patch versions in version order, each with the earliest match
/// start time observed on it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchTimeline {
    entries: Vec<TimelineEntry>,
}

impl PatchTimeline {
    pub fn from_versions(versions: impl IntoIterator<Item = (PatchVersion, i64)>) -> Self {
        let mut seen: BTreeMap<PatchVersion, i64> = BTreeMap::new();
        for (v, t) in versions {
            seen.entry(v).and_modify(|e| *e = (*e).min(t)).or_insert(t);
        }
        let entries: Vec<_> = seen
            .into_iter()
            .map(|(version, first_seen)| TimelineEntry {
                version,
                first_seen,
            })
            .collect();
        for w in entries.windows(2) {
            if w[1].first_seen < w[0].first_seen {
                log::warn!(
                    "patch {} first seen before {} although it is the later version",
                    w[1].version,
                    w[0].version
                );
            }
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[TimelineEntry] {
        &self.entries
    }

    pub fn versions(&self) -> impl Iterator<Item = PatchVersion> + '_ {
        self.entries.iter().map(|e| e.version)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, v: PatchVersion) -> bool {
        self.entries.binary_search_by(|e| e.version.cmp(&v)).is_ok()
    }

    /// Consecutive `(w_t, w_{t+1})` pairs in version order.
    pub fn pairs(&self) -> Vec<PatchPair> {
        self.entries
            .windows(2)
            .map(|w| PatchPair::new(w[0].version, w[1].version))
            .collect()
    }
}

/// Distinct versions across `matches`, sorted by `(major, minor)`.
pub fn build_patch_timeline(matches: &[MatchRecord]) -> PatchTimeline {
    let timeline = PatchTimeline::from_versions(matches.iter().map(|m| (m.patch, m.start_time)));
    log::info!("patch timeline: {} versions", timeline.len());
    timeline
}
