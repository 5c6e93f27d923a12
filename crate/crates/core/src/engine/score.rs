use std::cmp::Ordering;
use std::fmt;

/// An engine evaluation from the side to move's point of view.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum EngineScore {
    /// Advantage in pawn units (engines emit centipawns; divided by 100).
    Pawns(f64),
    /// Forced mate: positive when the side to move mates in `n` moves,
    /// negative when it is mated. Never zero.
    Mate(i32),
}

impl EngineScore {
    pub fn from_centipawns(cp: i64) -> EngineScore {
        EngineScore::Pawns(cp as f64 / 100.0)
    }

    /// A mate score, or `None` for the invalid distance zero.
    pub fn mate(n: i32) -> Option<EngineScore> {
        (n != 0).then_some(EngineScore::Mate(n))
    }

    /// The same evaluation seen by the other side. An involution.
    pub fn flipped(self) -> EngineScore {
        match self {
            EngineScore::Pawns(p) => EngineScore::Pawns(-p),
            EngineScore::Mate(n) => EngineScore::Mate(-n),
        }
    }

    pub fn pawns(self) -> Option<f64> {
        match self {
            EngineScore::Pawns(p) => Some(p),
            EngineScore::Mate(_) => None,
        }
    }

    /// Centipawns rounded to the nearest integer, for the pawn variant.
    pub fn centipawns(self) -> Option<i64> {
        self.pawns().map(|p| (p * 100.0).round() as i64)
    }

    /// Total order used to rank lines: mates beat any pawn score, quicker
    /// mates beat slower ones.
    pub fn rank_key(self) -> f64 {
        match self {
            EngineScore::Pawns(p) => p,
            EngineScore::Mate(n) if n > 0 => 1.0e6 - n as f64,
            EngineScore::Mate(n) => -1.0e6 - n as f64,
        }
    }

    pub fn compare(self, other: EngineScore) -> Ordering {
        self.rank_key().total_cmp(&other.rank_key())
    }

    /// UCI `score` payload, e.g. `cp 20` or `mate -3`.
    pub fn to_uci(self) -> String {
        match self {
            EngineScore::Pawns(_) => format!("cp {}", self.centipawns().unwrap_or(0)),
            EngineScore::Mate(n) => format!("mate {n}"),
        }
    }

    pub fn parse_uci(kind: &str, value: &str) -> Option<EngineScore> {
        let v: i64 = value.parse().ok()?;
        match kind {
            "cp" => Some(EngineScore::from_centipawns(v)),
            "mate" => EngineScore::mate(i32::try_from(v).ok()?),
            _ => None,
        }
    }
}

impl fmt::Display for EngineScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineScore::Pawns(p) => write!(f, "{p:+.2}"),
            EngineScore::Mate(n) if *n > 0 => write!(f, "Mate in {n}"),
            EngineScore::Mate(n) => write!(f, "Mated in {}", -n),
        }
    }
}

/// Search limits for a single `go` command.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub depth: Option<u32>,
    pub movetime_ms: Option<u64>,
    pub multipv: u32,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            depth: Some(20),
            movetime_ms: None,
            multipv: 5,
        }
    }
}

impl SearchLimits {
    pub fn depth(depth: u32) -> SearchLimits {
        SearchLimits {
            depth: Some(depth),
            ..SearchLimits::default()
        }
    }

    pub fn is_valid(&self) -> bool {
        (self.depth.is_some() || self.movetime_ms.is_some()) && self.multipv >= 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centipawns_scale_to_pawns() {
        assert_eq!(EngineScore::from_centipawns(20), EngineScore::Pawns(0.2));
        assert_eq!(EngineScore::parse_uci("cp", "-256"), Some(EngineScore::Pawns(-2.56)));
        assert_eq!(EngineScore::parse_uci("mate", "5"), Some(EngineScore::Mate(5)));
        assert_eq!(EngineScore::parse_uci("mate", "0"), None);
        assert_eq!(EngineScore::parse_uci("cp", "x"), None);
    }

    #[test]
    fn flip_is_involution() {
        for s in [EngineScore::Pawns(1.25), EngineScore::Mate(-3), EngineScore::Mate(7)] {
            assert_eq!(s.flipped().flipped(), s);
        }
        assert_eq!(EngineScore::Mate(-3).flipped(), EngineScore::Mate(3));
    }

    #[test]
    fn ordering_puts_mates_at_extremes() {
        let mut v = [
            EngineScore::Pawns(3.0),
            EngineScore::Mate(-2),
            EngineScore::Mate(5),
            EngineScore::Mate(1),
            EngineScore::Pawns(-9.0),
        ];
        v.sort_by(|a, b| b.compare(*a));
        assert_eq!(
            v,
            [
                EngineScore::Mate(1),
                EngineScore::Mate(5),
                EngineScore::Pawns(3.0),
                EngineScore::Pawns(-9.0),
                EngineScore::Mate(-2),
            ]
        );
    }

    #[test]
    fn limits_validity() {
        assert!(SearchLimits::default().is_valid());
        let none = SearchLimits {
            depth: None,
            movetime_ms: None,
            multipv: 1,
        };
        assert!(!none.is_valid());
    }
}
