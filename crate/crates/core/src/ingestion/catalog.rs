use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ChampionId, IngestError};

/// The seven disjoint champion classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChampionType {
    Controller,
    Fighter,
    Mage,
    Marksman,
    Slayer,
    Tank,
    Unique,
}

impl ChampionType {
    pub const ALL: [ChampionType; 7] = [
        ChampionType::Controller,
        ChampionType::Fighter,
        ChampionType::Mage,
        ChampionType::Marksman,
        ChampionType::Slayer,
        ChampionType::Tank,
        ChampionType::Unique,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChampionType::Controller => "controller",
            ChampionType::Fighter => "fighter",
            ChampionType::Mage => "mage",
            ChampionType::Marksman => "marksman",
            ChampionType::Slayer => "slayer",
            ChampionType::Tank => "tank",
            ChampionType::Unique => "unique",
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            ChampionType::Controller => "controllers",
            ChampionType::Fighter => "fighters",
            ChampionType::Mage => "mages",
            ChampionType::Marksman => "marksmen",
            ChampionType::Slayer => "slayers",
            ChampionType::Tank => "tanks",
            ChampionType::Unique => "uniques",
        }
    }
}

impl FromStr for ChampionType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ChampionType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown champion type `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChampionInfo {
    pub name: String,
    pub champion_type: ChampionType,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChampionCatalog {
    champions: BTreeMap<ChampionId, ChampionInfo>,
}

impl ChampionCatalog {
    pub fn insert(&mut self, id: ChampionId, info: ChampionInfo) -> Option<ChampionInfo> {
        self.champions.insert(id, info)
    }

    pub fn get(&self, id: &ChampionId) -> Option<&ChampionInfo> {
        self.champions.get(id)
    }

    pub fn contains(&self, id: &ChampionId) -> bool {
        self.champions.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.champions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.champions.is_empty()
    }

    /// Catalog name, or the raw id for unknown champions.
    pub fn display_name<'a>(&'a self, id: &'a ChampionId) -> &'a str {
        self.get(id).map_or(id.as_str(), |c| c.name.as_str())
    }

    /// Champions ordered by name, then id.
    pub fn by_name(&self) -> Vec<(&ChampionId, &ChampionInfo)> {
        let mut v: Vec<_> = self.champions.iter().collect();
        v.sort_by(|a, b| a.1.name.cmp(&b.1.name).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Looks a champion up by id first, then by exact name.
    pub fn resolve(&self, key: &str) -> Option<ChampionId> {
        let id = ChampionId::new(key);
        if self.contains(&id) {
            return Some(id);
        }
        self.champions
            .iter()
            .find(|(_, info)| info.name == key)
            .map(|(id, _)| id.clone())
    }
}

/// Reads `champion_id,name,champion_type` rows.
pub fn read_catalog<R: Read>(reader: R) -> Result<ChampionCatalog, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                file: "champions.csv".into(),
                column: name.into(),
            })
    };
    let (id_col, name_col, type_col) = (col("champion_id")?, col("name")?, col("champion_type")?);
    let mut catalog = ChampionCatalog::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let id = field(id_col);
        if id.is_empty() {
            return Err(IngestError::Catalog {
                line,
                reason: "empty champion_id".into(),
            });
        }
        let champion_type = field(type_col)
            .parse()
            .map_err(|reason| IngestError::Catalog { line, reason })?;
        let info = ChampionInfo {
            name: field(name_col).to_string(),
            champion_type,
        };
        if catalog.insert(ChampionId::new(id), info).is_some() {
            return Err(IngestError::Catalog {
                line,
                reason: format!("duplicate champion `{id}`"),
            });
        }
    }
    Ok(catalog)
}

pub fn load_catalog(path: &Path) -> Result<ChampionCatalog, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_catalog(file)
}
