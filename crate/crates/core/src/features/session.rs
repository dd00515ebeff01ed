/// Idle time that starts a new session: 15 minutes, inclusive.
pub const DEFAULT_SESSION_GAP_SECS: i64 = 15 * 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchSpan {
    pub start: i64,
    pub duration: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionAssignment {
    /// 1-based.
    pub session_number: u32,
    /// 1-based position inside the session.
    pub match_index_in_session: u32,
    /// Idle seconds since the previous match ended; `None` for the first match.
    pub time_since_last_match: Option<i64>,
    /// Set when this match started before the previous one ended.
    pub overlapped: bool,
}

/// Splits one user's chronologically sorted matches into sessions. The gap
/// is measured from the end of the previous match to the start of the next;
/// a gap of at least `gap_threshold` opens a new session.
pub fn sessionize(spans: &[MatchSpan], gap_threshold: i64) -> Vec<SessionAssignment> {
    let mut out = Vec::with_capacity(spans.len());
    let mut prev: Option<&MatchSpan> = None;
    let (mut session, mut index) = (0u32, 0u32);
    for span in spans {
        let (gap, overlapped) = match prev {
            None => (None, false),
            Some(p) => {
                let raw = span.start - (p.start + p.duration);
                if raw < 0 {
                    log::warn!(
                        "match starting at {} overlaps the previous match; gap taken as 0",
                        span.start
                    );
                    (Some(0), true)
                } else {
                    (Some(raw), false)
                }
            }
        };
        match gap {
            Some(g) if g < gap_threshold => index += 1,
            _ => {
                session += 1;
                index = 1;
            }
        }
        out.push(SessionAssignment {
            session_number: session,
            match_index_in_session: index,
            time_since_last_match: gap,
            overlapped,
        });
        prev = Some(span);
    }
    out
}
