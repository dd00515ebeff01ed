//! Session assignment and per-player rolling features on a short history.

use patchtree::features::{
    rolling_stats, sessionize, HistoryMatch, MatchSpan, DEFAULT_SESSION_GAP_SECS,
};

fn main() {
    // Four 30-minute matches separated by 10, 15 and 40 minute breaks.
    let starts = [0, 2_400, 5_100, 9_300];
    let spans: Vec<MatchSpan> = starts
        .iter()
        .map(|&start| MatchSpan {
            start,
            duration: 1_800,
        })
        .collect();
    for (s, a) in spans
        .iter()
        .zip(sessionize(&spans, DEFAULT_SESSION_GAP_SECS))
    {
        println!(
            "start {:>5}s  session {}  match {} of session",
            s.start, a.session_number, a.match_index_in_session
        );
    }

    let history: Vec<HistoryMatch> = starts
        .iter()
        .enumerate()
        .map(|(i, &start)| HistoryMatch {
            match_id: format!("m{i}"),
            start,
            duration: 1_800,
            kills: 2 + 3 * i as u32,
            deaths: 4,
            assists: 6,
            gold_earned: 9_000,
            gold_spent: 8_500,
            champ_level: 14,
            won: i % 2 == 0,
            tier: None,
        })
        .collect();
    println!();
    for f in rolling_stats("player-1", &history, DEFAULT_SESSION_GAP_SECS) {
        println!(
            "{}: prior matches {}  mean kills so far {:.2}  gap {}",
            f.match_id,
            f.matches_played_so_far,
            f.history.mean.kills,
            f.time_since_last_match
                .map_or("-".into(), |g| format!("{g}s"))
        );
    }
}
