use thiserror::Error;

use crate::chess::{CastlingSide, Move, Position, Role, Square};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SanError {
    #[error("malformed SAN token '{0}'")]
    Syntax(String),
    #[error("no legal move matches '{0}'")]
    NoMatch(String),
    #[error("'{0}' is ambiguous, a disambiguator is required")]
    Ambiguous(String),
}

/// Syntactic content of a SAN token, before it is matched against a position.
#[derive(Debug, Clone, PartialEq, Eq)]
enum SanToken {
    Castle(CastlingSide),
    Normal {
        role: Role,
        from_file: Option<u8>,
        from_rank: Option<u8>,
        capture: bool,
        to: Square,
        promotion: Option<Role>,
    },
}

fn parse_token(token: &str) -> Result<SanToken, SanError> {
    let err = || SanError::Syntax(token.to_string());
    let s = token.trim_end_matches(['+', '#', '!', '?']);
    match s {
        "O-O" | "0-0" => return Ok(SanToken::Castle(CastlingSide::King)),
        "O-O-O" | "0-0-0" => return Ok(SanToken::Castle(CastlingSide::Queen)),
        _ => {}
    }
    if !s.is_ascii() || s.len() < 2 {
        return Err(err());
    }

    let (role, mut rest) = match s.as_bytes()[0] {
        b'N' => (Role::Knight, &s[1..]),
        b'B' => (Role::Bishop, &s[1..]),
        b'R' => (Role::Rook, &s[1..]),
        b'Q' => (Role::Queen, &s[1..]),
        b'K' => (Role::King, &s[1..]),
        b'a'..=b'h' => (Role::Pawn, s),
        _ => return Err(err()),
    };

    let mut promotion = None;
    if let Some(&last) = rest.as_bytes().last() {
        if matches!(last, b'N' | b'B' | b'R' | b'Q') {
            if role != Role::Pawn {
                return Err(err());
            }
            promotion = Role::from_char(last as char);
            rest = &rest[..rest.len() - 1];
            rest = rest.strip_suffix('=').unwrap_or(rest);
        }
    }

    if rest.len() < 2 {
        return Err(err());
    }
    let to = Square::parse(&rest[rest.len() - 2..]).ok_or_else(err)?;
    let mut pre = &rest[..rest.len() - 2];
    let capture = if let Some(p) = pre.strip_suffix('x') {
        pre = p;
        true
    } else {
        false
    };

    let mut from_file = None;
    let mut from_rank = None;
    for b in pre.bytes() {
        match b {
            b'a'..=b'h' if from_file.is_none() && from_rank.is_none() => {
                from_file = Some(b - b'a')
            }
            b'1'..=b'8' if from_rank.is_none() => from_rank = Some(b - b'1'),
            _ => return Err(err()),
        }
    }
    if role == Role::Pawn && capture && from_file.is_none() {
        return Err(err());
    }
    if role == Role::Pawn && !capture && (from_file.is_some() || from_rank.is_some()) {
        return Err(err());
    }

    Ok(SanToken::Normal {
        role,
        from_file,
        from_rank,
        capture,
        to,
        promotion,
    })
}

pub(crate) fn check_san_syntax(token: &str) -> Result<(), SanError> {
    parse_token(token).map(|_| ())
}

/// Resolves a SAN token to the unique matching legal move in `pos`.
///
/// Check and mate suffixes are accepted but ignored. A capture mark must
/// agree with the move; a missing one is tolerated.
pub fn parse_san(pos: &Position, token: &str) -> Result<Move, SanError> {
    let parsed = parse_token(token)?;
    let legal = pos.legal_moves();
    let candidates: Vec<Move> = match parsed {
        SanToken::Castle(side) => legal
            .into_iter()
            .filter(|m| m.castling_side() == Some(side))
            .collect(),
        SanToken::Normal {
            role,
            from_file,
            from_rank,
            capture,
            to,
            promotion,
        } => legal
            .into_iter()
            .filter(|m| {
                m.to == to
                    && !m.is_castle()
                    && pos.piece_at(m.from).map(|p| p.role) == Some(role)
                    && m.promotion == promotion
                    && from_file.is_none_or(|f| m.from.file() == f)
                    && from_rank.is_none_or(|r| m.from.rank() == r)
                    && (!capture || m.is_capture())
            })
            .collect(),
    };
    match candidates.len() {
        0 => Err(SanError::NoMatch(token.to_string())),
        1 => Ok(candidates[0]),
        _ => Err(SanError::Ambiguous(token.to_string())),
    }
}

/// Canonical SAN for a legal move, including the check or mate suffix.
pub fn render_san(pos: &Position, m: &Move) -> String {
    let mut out = render_san_plain(pos, m);
    let next = pos.play_unchecked(m);
    if next.is_check() {
        out.push(if next.legal_moves().is_empty() { '#' } else { '+' });
    }
    out
}

fn render_san_plain(pos: &Position, m: &Move) -> String {
    match m.castling_side() {
        Some(CastlingSide::King) => return "O-O".into(),
        Some(CastlingSide::Queen) => return "O-O-O".into(),
        None => {}
    }
    let role = pos.piece_at(m.from).map(|p| p.role).unwrap_or(Role::Pawn);
    let mut out = String::with_capacity(8);
    if role == Role::Pawn {
        if m.is_capture() {
            out.push(m.from.file_char());
            out.push('x');
        }
        out.push_str(&m.to.to_string());
        if let Some(p) = m.promotion {
            out.push('=');
            out.push(p.upper_char());
        }
        return out;
    }

    out.push(role.upper_char());
    let rivals: Vec<Move> = pos
        .legal_moves()
        .into_iter()
        .filter(|o| {
            o.to == m.to
                && o.from != m.from
                && !o.is_castle()
                && pos.piece_at(o.from).map(|p| p.role) == Some(role)
        })
        .collect();
    if !rivals.is_empty() {
        let file_unique = rivals.iter().all(|o| o.from.file() != m.from.file());
        let rank_unique = rivals.iter().all(|o| o.from.rank() != m.from.rank());
        if file_unique {
            out.push(m.from.file_char());
        } else if rank_unique {
            out.push(m.from.rank_char());
        } else {
            out.push(m.from.file_char());
            out.push(m.from.rank_char());
        }
    }
    if m.is_capture() {
        out.push('x');
    }
    out.push_str(&m.to.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::parse_fen;

    #[test]
    fn knight_rank_disambiguation() {
        // Two knights on the g-file can both reach e7.
        let pos = parse_fen("r1bqk1nr/pppp1ppp/6n1/4P2P/1b1P4/2N5/PPP2PP1/R1BQKB1R b KQkq - 0 8")
            .unwrap();
        let m = parse_san(&pos, "N6e7").unwrap();
        assert_eq!(m.from, Square::parse("g6").unwrap());
        assert_eq!(render_san(&pos, &m), "N6e7");
        assert!(matches!(parse_san(&pos, "Ne7"), Err(SanError::Ambiguous(_))));
        let other = parse_san(&pos, "N8e7").unwrap();
        assert_eq!(other.from, Square::parse("g8").unwrap());
    }

    #[test]
    fn castling_tokens() {
        let pos = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1").unwrap();
        let oo = parse_san(&pos, "O-O").unwrap();
        assert_eq!(oo.castling_side(), Some(CastlingSide::King));
        assert_eq!(parse_san(&pos, "0-0-0").unwrap().castling_side(), Some(CastlingSide::Queen));
        assert_eq!(render_san(&pos, &oo), "O-O");
    }

    #[test]
    fn unreachable_queen_square_is_no_match() {
        let pos = Position::startpos();
        assert!(matches!(parse_san(&pos, "Qd8"), Err(SanError::NoMatch(_))));
    }

    #[test]
    fn check_suffix_is_ignored_and_regenerated() {
        let pos = parse_fen("4k3/8/8/8/8/8/8/R3K3 w - - 0 1").unwrap();
        let m = parse_san(&pos, "Ra8").unwrap();
        assert_eq!(parse_san(&pos, "Ra8+").unwrap(), m);
        assert_eq!(parse_san(&pos, "Ra8#").unwrap(), m);
        assert_eq!(render_san(&pos, &m), "Ra8+");
    }

    #[test]
    fn mate_suffix() {
        let pos =
            parse_fen("rnbqkbnr/pppp1ppp/8/4p3/6P1/5P2/PPPPP2P/RNBQKBNR b KQkq - 0 2").unwrap();
        let m = parse_san(&pos, "Qh4").unwrap();
        assert_eq!(render_san(&pos, &m), "Qh4#");
    }

    #[test]
    fn promotion_forms() {
        let pos = parse_fen("1r2k3/P7/8/8/8/8/8/4K3 w - - 0 1").unwrap();
        let q = parse_san(&pos, "a8=Q+").unwrap();
        assert_eq!(q.promotion, Some(Role::Queen));
        assert_eq!(parse_san(&pos, "a8Q").unwrap(), q);
        let xn = parse_san(&pos, "axb8=N").unwrap();
        assert_eq!(xn.promotion, Some(Role::Knight));
        assert_eq!(render_san(&pos, &xn), "axb8=N");
        assert!(matches!(parse_san(&pos, "a8"), Err(SanError::NoMatch(_))));
    }

    #[test]
    fn capture_mark_must_match() {
        let pos = Position::startpos();
        assert!(matches!(parse_san(&pos, "Nxf3"), Err(SanError::NoMatch(_))));
    }

    #[test]
    fn syntax_errors() {
        let pos = Position::startpos();
        for bad in ["", "Z4", "e9", "Ke", "xe4", "Nf3Q", "e4=K", "de4"] {
            assert!(
                matches!(parse_san(&pos, bad), Err(SanError::Syntax(_))),
                "expected syntax error for {bad:?}"
            );
        }
    }

    #[test]
    fn file_then_square_disambiguation() {
        let pos = parse_fen("4k3/8/8/8/8/8/4K3/R6R w - - 0 1").unwrap();
        let m = parse_san(&pos, "Rad1").unwrap();
        assert_eq!(render_san(&pos, &m), "Rad1");
        assert!(matches!(parse_san(&pos, "Rd1"), Err(SanError::Ambiguous(_))));
        // Queens on a1, a4 and d4 all reach d1.
        let pos = parse_fen("6k1/8/8/8/Q2Q4/8/8/Q3K3 w - - 0 1").unwrap();
        let m = parse_san(&pos, "Qa4d1").unwrap();
        assert_eq!(render_san(&pos, &m), "Qa4d1");
        let m = parse_san(&pos, "Q1d1").unwrap();
        assert_eq!(render_san(&pos, &m), "Q1d1");
    }
}
