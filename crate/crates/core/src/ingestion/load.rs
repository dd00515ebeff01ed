use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use csv::StringRecord;
use serde::{Deserialize, Serialize};

use super::{
    ChampionCatalog, ChampionId, IngestError, MapMode, MatchRecord, PlayerMatchRecord, QueueType,
    Team, Tier,
};

pub const MATCH_COLUMNS: [&str; 8] = [
    "match_id",
    "start_time",
    "duration",
    "patch",
    "queue_type",
    "map_mode",
    "season_id",
    "winning_team",
];

pub const PLAYER_COLUMNS: [&str; 13] = [
    "match_id",
    "user_id",
    "team",
    "champion",
    "role",
    "lane",
    "kills",
    "deaths",
    "assists",
    "gold_earned",
    "gold_spent",
    "champ_level",
    "highest_prev_season_tier",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub file: String,
    pub line: u64,
    pub reason: String,
    pub detail: String,
}

/// Rows that failed validation, with their source line.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectReport {
    pub rejects: Vec<Reject>,
}

impl RejectReport {
    fn push(&mut self, file: &str, line: u64, reason: &str, detail: impl Into<String>) {
        self.rejects.push(Reject {
            file: file.to_string(),
            line,
            reason: reason.to_string(),
            detail: detail.into(),
        });
    }

    pub fn len(&self) -> usize {
        self.rejects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rejects.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["file", "line", "reason", "detail"])?;
        for r in &self.rejects {
            wtr.write_record([r.file.as_str(), &r.line.to_string(), &r.reason, &r.detail])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions<'a> {
    /// Abort when rejected rows exceed this fraction of all data rows.
    pub max_reject_rate: f64,
    /// When set, player rows whose champion is not listed are rejected.
    pub catalog: Option<&'a ChampionCatalog>,
}

impl Default for LoadOptions<'_> {
    fn default() -> Self {
        Self {
            max_reject_rate: 0.01,
            catalog: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TelemetryTables {
    pub matches: Vec<MatchRecord>,
    pub player_matches: Vec<PlayerMatchRecord>,
    pub rejects: RejectReport,
    /// Data rows read across both files, rejected ones included.
    pub rows_read: usize,
}

impl TelemetryTables {
    /// Ranked 5v5 matches and the player rows belonging to them.
    pub fn competitive(&self) -> TelemetryTables {
        let matches = super::filter_competitive(&self.matches);
        let keep: HashSet<&str> = matches.iter().map(|m| m.match_id.as_str()).collect();
        let player_matches = self
            .player_matches
            .iter()
            .filter(|p| keep.contains(p.match_id.as_str()))
            .cloned()
            .collect();
        TelemetryTables {
            matches,
            player_matches,
            rejects: self.rejects.clone(),
            rows_read: self.rows_read,
        }
    }
}

struct Columns {
    idx: Vec<usize>,
}

impl Columns {
    fn resolve(headers: &StringRecord, required: &[&str], file: &str) -> Result<Self, IngestError> {
        let idx = required
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h.trim() == *name)
                    .ok_or_else(|| IngestError::MissingColumn {
                        file: file.to_string(),
                        column: name.to_string(),
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { idx })
    }

    fn get<'r>(&self, rec: &'r StringRecord, i: usize) -> &'r str {
        rec.get(self.idx[i]).unwrap_or("").trim()
    }
}

type RowResult<T> = Result<T, (&'static str, String)>;

fn parse_int<T: std::str::FromStr>(raw: &str, column: &str, reason: &'static str) -> RowResult<T> {
    raw.parse()
        .map_err(|_| (reason, format!("{column}=`{raw}`")))
}

fn parse_match(cols: &Columns, rec: &StringRecord) -> RowResult<MatchRecord> {
    let match_id = cols.get(rec, 0);
    if match_id.is_empty() {
        return Err(("unparsable field", "empty match_id".into()));
    }
    let start_time = parse_int(cols.get(rec, 1), "start_time", "unparsable field")?;
    let duration: i64 = parse_int(cols.get(rec, 2), "duration", "unparsable field")?;
    if duration <= 0 {
        return Err(("invalid value", format!("duration={duration}")));
    }
    let raw_patch = cols.get(rec, 3);
    let patch = raw_patch
        .parse()
        .map_err(|_| ("unparsable patch", format!("patch=`{raw_patch}`")))?;
    let raw_queue = cols.get(rec, 4);
    let (queue_type, queue_subtype) = match raw_queue {
        "ranked" => (QueueType::Ranked, None),
        q if q.starts_with("ranked_") => (QueueType::Ranked, Some(q.to_string())),
        "normal" => (QueueType::Normal, None),
        q if q.starts_with("normal_") => (QueueType::Normal, Some(q.to_string())),
        "" => return Err(("unparsable field", "empty queue_type".into())),
        q => (QueueType::Other, Some(q.to_string())),
    };
    let map_mode = match cols.get(rec, 5) {
        "five_v_five" | "5v5" => MapMode::FiveVFive,
        "three_v_three" | "3v3" => MapMode::ThreeVThree,
        "" => return Err(("unparsable field", "empty map_mode".into())),
        _ => MapMode::Other,
    };
    let season_id = parse_int(cols.get(rec, 6), "season_id", "unparsable field")?;
    let raw_team = cols.get(rec, 7);
    let winning_team = raw_team
        .parse::<Team>()
        .map_err(|_| ("unparsable field", format!("winning_team=`{raw_team}`")))?;
    Ok(MatchRecord {
        match_id: match_id.to_string(),
        start_time,
        duration,
        patch,
        queue_type,
        queue_subtype,
        map_mode,
        season_id,
        winning_team,
    })
}

fn parse_player(cols: &Columns, rec: &StringRecord) -> RowResult<PlayerMatchRecord> {
    let match_id = cols.get(rec, 0);
    let user_id = cols.get(rec, 1);
    if match_id.is_empty() || user_id.is_empty() {
        return Err(("unparsable field", "empty match_id or user_id".into()));
    }
    let raw_team = cols.get(rec, 2);
    let team = raw_team
        .parse::<Team>()
        .map_err(|_| ("unparsable field", format!("team=`{raw_team}`")))?;
    let champion = cols.get(rec, 3);
    if champion.is_empty() {
        return Err(("unparsable field", "empty champion".into()));
    }
    let count = |i: usize, name: &str| parse_int::<u32>(cols.get(rec, i), name, "unparsable count");
    let gold = |i: usize, name: &str| parse_int::<u64>(cols.get(rec, i), name, "unparsable count");
    let kills = count(6, "kills")?;
    let deaths = count(7, "deaths")?;
    let assists = count(8, "assists")?;
    let gold_earned = gold(9, "gold_earned")?;
    let gold_spent = gold(10, "gold_spent")?;
    let champ_level: u8 = parse_int(cols.get(rec, 11), "champ_level", "unparsable field")?;
    if !(1..=18).contains(&champ_level) {
        return Err(("invalid value", format!("champ_level={champ_level}")));
    }
    let raw_tier = cols.get(rec, 12);
    let highest_prev_season_tier = if raw_tier.is_empty() {
        None
    } else {
        Some(raw_tier.parse::<Tier>().map_err(|_| {
            (
                "unparsable field",
                format!("highest_prev_season_tier=`{raw_tier}`"),
            )
        })?)
    };
    Ok(PlayerMatchRecord {
        match_id: match_id.to_string(),
        user_id: user_id.to_string(),
        team,
        champion: ChampionId::new(champion),
        role: cols.get(rec, 4).to_string(),
        lane: cols.get(rec, 5).to_string(),
        kills,
        deaths,
        assists,
        gold_earned,
        gold_spent,
        champ_level,
        highest_prev_season_tier,
    })
}

/// Parses and validates both telemetry tables. Bad rows land in the reject
/// report; the load only fails on a schema error or when the reject rate
/// exceeds `opts.max_reject_rate`.
pub fn read_tables<M: Read, P: Read>(
    matches: M,
    players: P,
    opts: &LoadOptions<'_>,
) -> Result<TelemetryTables, IngestError> {
    const MATCH_FILE: &str = "matches.csv";
    const PLAYER_FILE: &str = "player_matches.csv";
    let mut out = TelemetryTables::default();

    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(matches);
    let cols = Columns::resolve(rdr.headers()?, &MATCH_COLUMNS, MATCH_FILE)?;
    let mut seen_matches = HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        out.rows_read += 1;
        match parse_match(&cols, &rec) {
            Ok(m) if !seen_matches.insert(m.match_id.clone()) => {
                out.rejects.push(
                    MATCH_FILE,
                    line,
                    "duplicate match",
                    format!("match_id={}", m.match_id),
                );
            }
            Ok(m) => out.matches.push(m),
            Err((reason, detail)) => out.rejects.push(MATCH_FILE, line, reason, detail),
        }
    }

    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(players);
    let cols = Columns::resolve(rdr.headers()?, &PLAYER_COLUMNS, PLAYER_FILE)?;
    let mut seen_units: HashSet<(String, String)> = HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        out.rows_read += 1;
        let pm = match parse_player(&cols, &rec) {
            Ok(pm) => pm,
            Err((reason, detail)) => {
                out.rejects.push(PLAYER_FILE, line, reason, detail);
                continue;
            }
        };
        let unit = format!("match_id={} user_id={}", pm.match_id, pm.user_id);
        if !seen_matches.contains(&pm.match_id) {
            out.rejects.push(PLAYER_FILE, line, "unknown match", unit);
        } else if opts.catalog.is_some_and(|c| !c.contains(&pm.champion)) {
            out.rejects.push(
                PLAYER_FILE,
                line,
                "unknown champion",
                format!("champion={}", pm.champion),
            );
        } else if !seen_units.insert((pm.match_id.clone(), pm.user_id.clone())) {
            out.rejects.push(PLAYER_FILE, line, "duplicate unit", unit);
        } else {
            out.player_matches.push(pm);
        }
    }

    // Player rows pointing at a rejected match stay rejected as "unknown match".
    let rejected = out.rejects.len();
    let rate = if out.rows_read == 0 {
        0.0
    } else {
        rejected as f64 / out.rows_read as f64
    };
    log::info!(
        "loaded {} matches, {} player rows, {} rejects",
        out.matches.len(),
        out.player_matches.len(),
        rejected
    );
    if rate > opts.max_reject_rate {
        return Err(IngestError::RejectRateExceeded {
            rate,
            threshold: opts.max_reject_rate,
            rejected,
            total: out.rows_read,
            report: out.rejects,
        });
    }
    Ok(out)
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads `matches.csv` and `player_matches.csv` from disk.
pub fn load_matches(
    matches_path: &Path,
    players_path: &Path,
    opts: &LoadOptions<'_>,
) -> Result<TelemetryTables, IngestError> {
    read_tables(open(matches_path)?, open(players_path)?, opts)
}

/// Per-match index for joins.
pub(crate) fn index_matches(matches: &[MatchRecord]) -> HashMap<&str, &MatchRecord> {
    matches.iter().map(|m| (m.match_id.as_str(), m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MATCHES: &str =
        "match_id,start_time,duration,patch,queue_type,map_mode,season_id,winning_team
m1,1000,1800,4.6,ranked,five_v_five,4,blue
m2,5000,2000,4.7,ranked,five_v_five,4,red
";

    fn players(extra: &str) -> String {
        let mut s = PLAYER_COLUMNS.join(",");
        s.push('\n');
        for m in ["m1", "m2"] {
            for i in 0..10 {
                let team = if i < 5 { "blue" } else { "red" };
                s.push_str(&format!("{m},u{i},{team},c{i},r,l,1,2,3,100,90,11,gold\n"));
            }
        }
        s.push_str(extra);
        s
    }

    fn lenient() -> LoadOptions<'static> {
        LoadOptions {
            max_reject_rate: 1.0,
            catalog: None,
        }
    }

    #[test]
    fn well_formed_file() {
        let t = read_tables(
            MATCHES.as_bytes(),
            players("").as_bytes(),
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(t.matches.len(), 2);
        assert_eq!(t.player_matches.len(), 20);
        assert!(t.rejects.is_empty());
        assert_eq!(
            t.player_matches[0].highest_prev_season_tier,
            Some(Tier::Gold)
        );
    }

    #[test]
    fn unparsable_count_is_rejected_with_line() {
        let t = read_tables(
            MATCHES.as_bytes(),
            players("m1,u99,blue,c1,r,l,abc,0,0,0,0,1,\n").as_bytes(),
            &lenient(),
        )
        .unwrap();
        assert_eq!(t.rejects.len(), 1);
        let r = &t.rejects.rejects[0];
        assert_eq!(r.reason, "unparsable count");
        assert_eq!(r.line, 22);
        assert_eq!(t.player_matches.len(), 20);
    }

    #[test]
    fn duplicate_unit_rejected_once() {
        let t = read_tables(
            MATCHES.as_bytes(),
            players("m1,u0,blue,c0,r,l,1,2,3,100,90,11,\n").as_bytes(),
            &lenient(),
        )
        .unwrap();
        let reasons: Vec<_> = t
            .rejects
            .rejects
            .iter()
            .map(|r| r.reason.as_str())
            .collect();
        assert_eq!(reasons, ["duplicate unit"]);
    }

    #[test]
    fn missing_column_names_it() {
        let err = read_tables(
            "match_id,start_time,duration,patch,queue_type,map_mode,winning_team\n".as_bytes(),
            players("").as_bytes(),
            &lenient(),
        )
        .unwrap_err();
        assert!(
            matches!(err, IngestError::MissingColumn { ref column, .. } if column == "season_id")
        );
    }

    #[test]
    fn reject_rate_threshold() {
        // 1 bad row in 23 data rows > 1%.
        let err = read_tables(
            MATCHES.as_bytes(),
            players("m9,u1,blue,c1,r,l,1,1,1,1,1,1,\n").as_bytes(),
            &LoadOptions::default(),
        )
        .unwrap_err();
        match err {
            IngestError::RejectRateExceeded {
                rejected,
                total,
                report,
                ..
            } => {
                assert_eq!((rejected, total), (1, 23));
                assert_eq!(report.rejects[0].reason, "unknown match");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn invalid_match_values() {
        let m = "match_id,start_time,duration,patch,queue_type,map_mode,season_id,winning_team
a,1,0,4.6,ranked,5v5,4,blue
b,1,10,4.6.1,ranked,5v5,4,blue
c,1,10,4.6,ranked,5v5,4,green
d,1,10,4.6,ranked_solo,5v5,4,red
d,1,10,4.6,ranked,5v5,4,red
";
        let t = read_tables(
            m.as_bytes(),
            PLAYER_COLUMNS.join(",").as_bytes(),
            &lenient(),
        )
        .unwrap();
        let reasons: Vec<_> = t
            .rejects
            .rejects
            .iter()
            .map(|r| r.reason.as_str())
            .collect();
        assert_eq!(
            reasons,
            [
                "invalid value",
                "unparsable patch",
                "unparsable field",
                "duplicate match"
            ]
        );
        assert_eq!(t.matches[0].queue_subtype.as_deref(), Some("ranked_solo"));
        assert_eq!(t.matches[0].queue_type, QueueType::Ranked);
    }
}
