//! A small match-telemetry simulator producing the three input CSVs, for
//! fixtures and the runnable examples. Kills and win odds shift per
//! (champion, patch), so consecutive patches have real treatment effects.

use std::collections::HashSet;
use std::io;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::ingestion::{
    ChampionCatalog, ChampionId, ChampionInfo, ChampionType, MapMode, MatchRecord, PatchVersion,
    PlayerMatchRecord, QueueType, Team, TelemetryTables, Tier, MATCH_COLUMNS, PLAYER_COLUMNS,
};

const ROSTER: [(&str, ChampionType); 30] = [
    ("Thresh", ChampionType::Controller),
    ("Lucian", ChampionType::Marksman),
    ("Vayne", ChampionType::Marksman),
    ("Ahri", ChampionType::Mage),
    ("Nami", ChampionType::Controller),
    ("Rengar", ChampionType::Slayer),
    ("Jhin", ChampionType::Marksman),
    ("Fiora", ChampionType::Fighter),
    ("LeeSin", ChampionType::Fighter),
    ("Ezreal", ChampionType::Marksman),
    ("Caitlyn", ChampionType::Marksman),
    ("Yasuo", ChampionType::Fighter),
    ("Zed", ChampionType::Slayer),
    ("Leona", ChampionType::Tank),
    ("Janna", ChampionType::Controller),
    ("Lux", ChampionType::Mage),
    ("Brand", ChampionType::Mage),
    ("Annie", ChampionType::Mage),
    ("Graves", ChampionType::Fighter),
    ("Darius", ChampionType::Fighter),
    ("Garen", ChampionType::Fighter),
    ("Malphite", ChampionType::Tank),
    ("Sion", ChampionType::Tank),
    ("KhaZix", ChampionType::Slayer),
    ("Bard", ChampionType::Unique),
    ("Azir", ChampionType::Unique),
    ("Teemo", ChampionType::Unique),
    ("Morgana", ChampionType::Controller),
    ("Ashe", ChampionType::Marksman),
    ("Syndra", ChampionType::Mage),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySpec {
    pub n_users: usize,
    pub matches_per_patch: usize,
    pub patches: Vec<PatchVersion>,
    /// At most 30.
    pub n_champions: usize,
    /// Standard deviation of per-(champion, patch) shifts in log mean kills.
    pub kill_shift_sd: f64,
    pub ranked_share: f64,
    pub seed: u64,
}

impl Default for TelemetrySpec {
    fn default() -> Self {
        Self {
            n_users: 300,
            matches_per_patch: 300,
            patches: (6..=9).map(|m| PatchVersion::new(4, m)).collect(),
            n_champions: 20,
            kill_shift_sd: 0.15,
            ranked_share: 0.9,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedTelemetry {
    pub matches: Vec<MatchRecord>,
    pub player_matches: Vec<PlayerMatchRecord>,
    pub catalog: ChampionCatalog,
}

impl SimulatedTelemetry {
    pub fn tables(&self) -> TelemetryTables {
        TelemetryTables {
            matches: self.matches.clone(),
            player_matches: self.player_matches.clone(),
            rows_read: self.matches.len() + self.player_matches.len(),
            ..Default::default()
        }
    }

    /// Writes `matches.csv`, `player_matches.csv` and `champions.csv`.
    pub fn write_csvs(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("matches.csv"))?;
        w.write_record(MATCH_COLUMNS)?;
        for m in &self.matches {
            let queue = m
                .queue_subtype
                .clone()
                .unwrap_or_else(|| match m.queue_type {
                    QueueType::Ranked => "ranked".into(),
                    QueueType::Normal => "normal".into(),
                    QueueType::Other => "other".into(),
                });
            let map = match m.map_mode {
                MapMode::FiveVFive => "five_v_five",
                MapMode::ThreeVThree => "three_v_three",
                MapMode::Other => "other",
            };
            w.write_record([
                m.match_id.clone(),
                m.start_time.to_string(),
                m.duration.to_string(),
                m.patch.to_string(),
                queue,
                map.into(),
                m.season_id.to_string(),
                m.winning_team.as_str().into(),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("player_matches.csv"))?;
        w.write_record(PLAYER_COLUMNS)?;
        for p in &self.player_matches {
            w.write_record([
                p.match_id.clone(),
                p.user_id.clone(),
                p.team.as_str().into(),
                p.champion.to_string(),
                p.role.clone(),
                p.lane.clone(),
                p.kills.to_string(),
                p.deaths.to_string(),
                p.assists.to_string(),
                p.gold_earned.to_string(),
                p.gold_spent.to_string(),
                p.champ_level.to_string(),
                p.highest_prev_season_tier
                    .map(|t| t.as_str().to_string())
                    .unwrap_or_default(),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("champions.csv"))?;
        w.write_record(["champion_id", "name", "champion_type"])?;
        for (id, info) in self.catalog.by_name() {
            w.write_record([id.as_str(), &info.name, info.champion_type.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct User {
    skill: f64,
    favorites: [usize; 3],
    free_at: i64,
    tier: Option<Tier>,
}

fn weighted_pick<R: Rng>(rng: &mut R, weights: &[f64], taken: &HashSet<usize>) -> usize {
    let total: f64 = weights
        .iter()
        .enumerate()
        .filter(|(i, _)| !taken.contains(i))
        .map(|(_, w)| w)
        .sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if taken.contains(&i) {
            continue;
        }
        if u < *w {
            return i;
        }
        u -= w;
    }
    (0..weights.len())
        .rev()
        .find(|i| !taken.contains(i))
        .expect("fewer than 10 champions taken")
}

pub fn simulate_telemetry(spec: &TelemetrySpec) -> SimulatedTelemetry {
    assert!(
        spec.n_champions >= 10 && spec.n_champions <= ROSTER.len(),
        "need 10..=30 champions"
    );
    assert!(spec.n_users >= 10, "need at least 10 users");
    let mut rng = super::stream(spec.seed, 1);
    let std_normal = Normal::new(0.0, 1.0).unwrap();

    let mut catalog = ChampionCatalog::default();
    for (i, (name, t)) in ROSTER.iter().take(spec.n_champions).enumerate() {
        catalog.insert(
            ChampionId::new((i + 1).to_string()),
            ChampionInfo {
                name: name.to_string(),
                champion_type: *t,
            },
        );
    }
    let popularity: Vec<f64> = (0..spec.n_champions)
        .map(|i| 1.0 / (i as f64 + 1.0).powf(0.7))
        .collect();

    let mut users: Vec<User> = (0..spec.n_users)
        .map(|_| {
            let skill: f64 = std_normal.sample(&mut rng);
            let mut taken = HashSet::new();
            let favorites = std::array::from_fn(|_| {
                let c = weighted_pick(&mut rng, &popularity, &taken);
                taken.insert(c);
                c
            });
            let tier = (rng.random::<f64>() < 0.8).then(|| {
                let ord = (2.5 + 1.5 * skill).round().clamp(0.0, 7.0) as usize;
                ord.to_string().parse::<Tier>().unwrap()
            });
            User {
                skill,
                favorites,
                free_at: 0,
                tier,
            }
        })
        .collect();

    // Per (patch, champion) shifts: log-kill multiplier and win-odds bump.
    let shifts: Vec<Vec<(f64, f64)>> = spec
        .patches
        .iter()
        .map(|_| {
            (0..spec.n_champions)
                .map(|_| {
                    (
                        spec.kill_shift_sd * std_normal.sample(&mut rng),
                        0.3 * std_normal.sample(&mut rng),
                    )
                })
                .collect()
        })
        .collect();

    let mut now: i64 = 1_400_000_000;
    let mut matches = Vec::new();
    let mut player_matches = Vec::new();
    for (pi, patch) in spec.patches.iter().enumerate() {
        for _ in 0..spec.matches_per_patch {
            now += rng.random_range(30..400);
            let mut free: Vec<usize> = (0..users.len())
                .filter(|&u| users[u].free_at <= now)
                .collect();
            if free.len() < 10 {
                let mut next: Vec<i64> = users.iter().map(|u| u.free_at).collect();
                next.sort_unstable();
                now = next[9];
                free = (0..users.len())
                    .filter(|&u| users[u].free_at <= now)
                    .collect();
            }
            let chosen: Vec<usize> = sample(&mut rng, free.len(), 10)
                .into_iter()
                .map(|i| free[i])
                .collect();
            let duration = rng.random_range(1200..2700);
            let match_id = format!("M{:06}", matches.len() + 1);

            let mut taken = HashSet::new();
            let mut picks = Vec::with_capacity(10);
            for &u in &chosen {
                let fav = users[u]
                    .favorites
                    .iter()
                    .copied()
                    .find(|c| !taken.contains(c));
                let c = fav.unwrap_or_else(|| weighted_pick(&mut rng, &popularity, &taken));
                taken.insert(c);
                picks.push(c);
            }
            let strength = |range: std::ops::Range<usize>| -> f64 {
                range
                    .map(|k| users[chosen[k]].skill + shifts[pi][picks[k]].1)
                    .sum()
            };
            let blue_wins =
                strength(0..5) - strength(5..10) + 1.5 * std_normal.sample(&mut rng) > 0.0;
            let winning_team = if blue_wins { Team::Blue } else { Team::Red };

            for (k, &u) in chosen.iter().enumerate() {
                let user = &users[u];
                let c = picks[k];
                let kill_rate = (5f64.ln() + 0.25 * user.skill + shifts[pi][c].0).exp();
                let kills = Poisson::new(kill_rate).unwrap().sample(&mut rng) as u32;
                let deaths = Poisson::new((5f64.ln() - 0.2 * user.skill).exp())
                    .unwrap()
                    .sample(&mut rng) as u32;
                let assists = Poisson::new(7.0).unwrap().sample(&mut rng) as u32;
                let gold_earned =
                    (8000.0 + 400.0 * f64::from(kills) + 1000.0 * std_normal.sample(&mut rng))
                        .max(500.0) as u64;
                player_matches.push(PlayerMatchRecord {
                    match_id: match_id.clone(),
                    user_id: format!("U{:05}", u + 1),
                    team: if k < 5 { Team::Blue } else { Team::Red },
                    champion: ChampionId::new((c + 1).to_string()),
                    role: ["solo", "solo", "none", "duo_carry", "duo_support"][k % 5].into(),
                    lane: ["top", "mid", "jungle", "bottom", "bottom"][k % 5].into(),
                    kills,
                    deaths,
                    assists,
                    gold_earned,
                    gold_spent: gold_earned * 9 / 10,
                    champ_level: rng.random_range(10..=18),
                    highest_prev_season_tier: user.tier,
                });
            }
            for &u in &chosen {
                users[u].free_at = now + duration + rng.random_range(0..3600);
            }
            let ranked = rng.random::<f64>() < spec.ranked_share;
            matches.push(MatchRecord {
                match_id,
                start_time: now,
                duration,
                patch: *patch,
                queue_type: if ranked {
                    QueueType::Ranked
                } else {
                    QueueType::Normal
                },
                queue_subtype: None,
                map_mode: if rng.random::<f64>() < 0.97 {
                    MapMode::FiveVFive
                } else {
                    MapMode::ThreeVThree
                },
                season_id: i64::from(patch.major),
                winning_team,
            });
        }
    }
    SimulatedTelemetry {
        matches,
        player_matches,
        catalog,
    }
}
