use thiserror::Error;

use crate::chess::{CastlingRights, CastlingSide, Color, Piece, Position, PositionError, Square};

pub const START_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FenError {
    #[error("malformed FEN: {0}")]
    Syntax(String),
    #[error("illegal position: {0}")]
    Semantic(#[from] PositionError),
}

fn syntax(msg: impl Into<String>) -> FenError {
    FenError::Syntax(msg.into())
}

/// Parses a FEN string. The two clock fields may be omitted.
pub fn parse_fen(text: &str) -> Result<Position, FenError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 6 && fields.len() != 4 {
        return Err(syntax(format!("expected 6 fields, found {}", fields.len())));
    }

    let mut board = [None; 64];
    let ranks: Vec<&str> = fields[0].split('/').collect();
    if ranks.len() != 8 {
        return Err(syntax("placement must have 8 ranks"));
    }
    for (i, rank_text) in ranks.iter().enumerate() {
        let rank = 7 - i as u8;
        let mut file = 0u8;
        for c in rank_text.chars() {
            if let Some(d) = c.to_digit(10) {
                if !(1..=8).contains(&d) {
                    return Err(syntax(format!("bad empty-square count '{c}'")));
                }
                file += d as u8;
            } else {
                let piece =
                    Piece::from_fen_char(c).ok_or_else(|| syntax(format!("bad piece '{c}'")))?;
                let sq = Square::from_coords(file, rank)
                    .ok_or_else(|| syntax(format!("rank {} overflows", rank + 1)))?;
                board[sq.index()] = Some(piece);
                file += 1;
            }
            if file > 8 {
                return Err(syntax(format!("rank {} overflows", rank + 1)));
            }
        }
        if file != 8 {
            return Err(syntax(format!("rank {} has {file} squares", rank + 1)));
        }
    }

    let turn = match fields[1] {
        "w" => Color::White,
        "b" => Color::Black,
        other => return Err(syntax(format!("bad side to move '{other}'"))),
    };

    let mut castling = CastlingRights::NONE;
    if fields[2] != "-" {
        for c in fields[2].chars() {
            let (color, side) = match c {
                'K' => (Color::White, CastlingSide::King),
                'Q' => (Color::White, CastlingSide::Queen),
                'k' => (Color::Black, CastlingSide::King),
                'q' => (Color::Black, CastlingSide::Queen),
                _ => return Err(syntax(format!("bad castling flag '{c}'"))),
            };
            if castling.has(color, side) {
                return Err(syntax(format!("repeated castling flag '{c}'")));
            }
            castling.set(color, side, true);
        }
    }

    let ep = match fields[3] {
        "-" => None,
        s => Some(Square::parse(s).ok_or_else(|| syntax(format!("bad en passant '{s}'")))?),
    };

    let (halfmove, fullmove) = if fields.len() == 6 {
        let h = fields[4]
            .parse::<u32>()
            .map_err(|_| syntax(format!("bad halfmove clock '{}'", fields[4])))?;
        let f = fields[5]
            .parse::<u32>()
            .map_err(|_| syntax(format!("bad fullmove number '{}'", fields[5])))?;
        (h, f)
    } else {
        (0, 1)
    };

    Ok(Position::from_parts(board, turn, castling, ep, halfmove, fullmove)?)
}

/// Canonical six-field FEN.
pub fn render_fen(pos: &Position) -> String {
    let mut out = String::with_capacity(90);
    for rank in (0..8).rev() {
        let mut empty = 0;
        for file in 0..8 {
            let sq = Square::from_coords(file, rank).expect("on board");
            match pos.piece_at(sq) {
                Some(p) => {
                    if empty > 0 {
                        out.push(char::from(b'0' + empty));
                        empty = 0;
                    }
                    out.push(p.fen_char());
                }
                None => empty += 1,
            }
        }
        if empty > 0 {
            out.push(char::from(b'0' + empty));
        }
        if rank > 0 {
            out.push('/');
        }
    }
    out.push(' ');
    out.push(if pos.turn() == Color::White { 'w' } else { 'b' });
    out.push(' ');
    let rights = pos.castling();
    if rights.is_empty() {
        out.push('-');
    } else {
        for (c, color, side) in [
            ('K', Color::White, CastlingSide::King),
            ('Q', Color::White, CastlingSide::Queen),
            ('k', Color::Black, CastlingSide::King),
            ('q', Color::Black, CastlingSide::Queen),
        ] {
            if rights.has(color, side) {
                out.push(c);
            }
        }
    }
    out.push(' ');
    match pos.ep_square() {
        Some(sq) => out.push_str(&sq.to_string()),
        None => out.push('-'),
    }
    out.push_str(&format!(
        " {} {}",
        pos.halfmove_clock(),
        pos.fullmove_number()
    ));
    out
}
