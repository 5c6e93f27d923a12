use std::fmt;

use thiserror::Error;

use super::san::{check_san_syntax, parse_san, render_san, SanError};
use crate::chess::{Move, Position};

/// Outcome recorded by a PGN termination marker.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum GameResult {
    WhiteWins,
    BlackWins,
    Draw,
    Unknown,
}

impl GameResult {
    pub fn parse(token: &str) -> Option<GameResult> {
        Some(match token {
            "1-0" => GameResult::WhiteWins,
            "0-1" => GameResult::BlackWins,
            "1/2-1/2" => GameResult::Draw,
            "*" => GameResult::Unknown,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GameResult::WhiteWins => "1-0",
            GameResult::BlackWins => "0-1",
            GameResult::Draw => "1/2-1/2",
            GameResult::Unknown => "*",
        }
    }
}

impl fmt::Display for GameResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MovetextError {
    #[error("unbalanced {0}")]
    Unbalanced(&'static str),
    #[error("unexpected token '{0}' after the result marker")]
    AfterResult(String),
    #[error(transparent)]
    San(#[from] SanError),
}

/// Ordered SAN tokens of a mainline with move numbers, comments, variations
/// and annotation glyphs stripped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Movetext {
    pub tokens: Vec<String>,
    pub result: Option<GameResult>,
}

impl Movetext {
    /// Lexes PGN-style movetext. Every remaining token must be syntactically
    /// valid SAN; legality is checked later against a position.
    pub fn parse(text: &str) -> Result<Movetext, MovetextError> {
        let mut tokens = Vec::new();
        let mut result = None;
        let mut depth = 0usize;
        let mut chars = text.chars().peekable();
        let mut current = String::new();

        fn flush(
            current: &mut String,
            depth: usize,
            tokens: &mut Vec<String>,
            result: &mut Option<GameResult>,
        ) -> Result<(), MovetextError> {
            if current.is_empty() {
                return Ok(());
            }
            let tok = std::mem::take(current);
            if depth > 0 {
                return Ok(());
            }
            if let Some(r) = GameResult::parse(&tok) {
                if result.is_some() {
                    return Err(MovetextError::AfterResult(tok));
                }
                *result = Some(r);
                return Ok(());
            }
            if result.is_some() {
                return Err(MovetextError::AfterResult(tok));
            }
            let san = strip_move_number(&tok);
            if san.is_empty() {
                return Ok(());
            }
            let san = san.trim_end_matches(['!', '?']);
            check_san_syntax(san)?;
            tokens.push(san.to_string());
            Ok(())
        }

        while let Some(c) = chars.next() {
            match c {
                '{' => {
                    flush(&mut current, depth, &mut tokens, &mut result)?;
                    let mut closed = false;
                    for d in chars.by_ref() {
                        if d == '}' {
                            closed = true;
                            break;
                        }
                    }
                    if !closed {
                        return Err(MovetextError::Unbalanced("comment brace"));
                    }
                }
                '}' => return Err(MovetextError::Unbalanced("comment brace")),
                ';' => {
                    flush(&mut current, depth, &mut tokens, &mut result)?;
                    for d in chars.by_ref() {
                        if d == '\n' {
                            break;
                        }
                    }
                }
                '(' => {
                    flush(&mut current, depth, &mut tokens, &mut result)?;
                    depth += 1;
                }
                ')' => {
                    flush(&mut current, depth, &mut tokens, &mut result)?;
                    if depth == 0 {
                        return Err(MovetextError::Unbalanced("variation parenthesis"));
                    }
                    depth -= 1;
                }
                '$' => {
                    flush(&mut current, depth, &mut tokens, &mut result)?;
                    while chars.peek().is_some_and(|d| d.is_ascii_digit()) {
                        chars.next();
                    }
                }
                c if c.is_whitespace() => flush(&mut current, depth, &mut tokens, &mut result)?,
                c => current.push(c),
            }
        }
        flush(&mut current, depth, &mut tokens, &mut result)?;
        if depth > 0 {
            return Err(MovetextError::Unbalanced("variation parenthesis"));
        }
        Ok(Movetext { tokens, result })
    }
}

/// Removes a leading move number such as `12.` or `12...`.
fn strip_move_number(tok: &str) -> &str {
    let digits = tok.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return tok;
    }
    let rest = &tok[digits..];
    if rest.starts_with('.') {
        rest.trim_start_matches('.')
    } else {
        tok
    }
}

/// A resolved line of play from a start position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mainline {
    pub start: Position,
    /// `(position before the move, move)` for each ply.
    pub steps: Vec<(Position, Move)>,
    pub final_position: Position,
}

impl Mainline {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn moves(&self) -> impl Iterator<Item = &Move> {
        self.steps.iter().map(|(_, m)| m)
    }

    /// Position after `ply` half-moves (0 = start).
    pub fn position_at(&self, ply: usize) -> Option<&Position> {
        if ply == self.steps.len() {
            Some(&self.final_position)
        } else {
            self.steps.get(ply).map(|(p, _)| p)
        }
    }

    pub fn sans(&self) -> Vec<String> {
        self.steps.iter().map(|(p, m)| render_san(p, m)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MainlineError {
    #[error(transparent)]
    Movetext(#[from] MovetextError),
    #[error("ply {ply}: {source}")]
    Ply { ply: usize, source: SanError },
}

/// Resolves movetext from the standard start position.
pub fn parse_mainline(movetext: &str) -> Result<Mainline, MainlineError> {
    parse_mainline_from(Position::startpos(), movetext)
}

pub fn parse_mainline_from(start: Position, movetext: &str) -> Result<Mainline, MainlineError> {
    let text = Movetext::parse(movetext)?;
    resolve_tokens(start, &text.tokens)
}

pub(crate) fn resolve_tokens(
    start: Position,
    tokens: &[String],
) -> Result<Mainline, MainlineError> {
    let mut steps = Vec::with_capacity(tokens.len());
    let mut pos = start.clone();
    for (i, tok) in tokens.iter().enumerate() {
        let m = parse_san(&pos, tok).map_err(|source| MainlineError::Ply { ply: i + 1, source })?;
        let next = pos.play_unchecked(&m);
        steps.push((pos, m));
        pos = next;
    }
    Ok(Mainline {
        start,
        steps,
        final_position: pos,
    })
}

/// Renders moves from `start` as numbered SAN movetext (no result marker).
pub fn render_movetext(start: &Position, moves: &[Move]) -> String {
    let mut out = String::new();
    let mut pos = start.clone();
    for (i, m) in moves.iter().enumerate() {
        if !out.is_empty() {
            out.push(' ');
        }
        match pos.turn() {
            crate::chess::Color::White => out.push_str(&format!("{}. ", pos.fullmove_number())),
            crate::chess::Color::Black if i == 0 => {
                out.push_str(&format!("{}... ", pos.fullmove_number()))
            }
            _ => {}
        }
        out.push_str(&render_san(&pos, m));
        pos = pos.play_unchecked(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::render_fen;

    #[test]
    fn strips_numbers_comments_and_variations() {
        let text = "1.e4 {best by test} e5 2. Nf3 (2. f4 exf4 (2...d5)) 2... Nc6 $1 3.Bb5!? a6 *";
        let mt = Movetext::parse(text).unwrap();
        assert_eq!(mt.tokens, ["e4", "e5", "Nf3", "Nc6", "Bb5", "a6"]);
        assert_eq!(mt.result, Some(GameResult::Unknown));
    }

    #[test]
    fn rejects_unbalanced_input() {
        assert!(Movetext::parse("1. e4 (1. d4").is_err());
        assert!(Movetext::parse("1. e4 {oops").is_err());
        assert!(Movetext::parse("1. e4 )").is_err());
        assert!(Movetext::parse("1. e4 1-0 e5").is_err());
    }

    #[test]
    fn empty_movetext_is_empty_mainline() {
        let line = parse_mainline("").unwrap();
        assert!(line.is_empty());
        assert_eq!(line.final_position, Position::startpos());
    }

    #[test]
    fn mainline_reports_failing_ply() {
        let err = parse_mainline("1. e4 e5 2. Ke3").unwrap_err();
        assert!(matches!(err, MainlineError::Ply { ply: 3, .. }));
    }

    #[test]
    fn stafford_offer_is_legal() {
        let line = parse_mainline("1.e4 e5 2.Nf3 Nf6 3. Nxe5").unwrap();
        let replies = line.final_position.legal_moves();
        let nc6 = crate::notation::parse_san(&line.final_position, "Nc6").unwrap();
        assert!(replies.contains(&nc6));
        assert_eq!(
            render_fen(&line.final_position),
            "rnbqkb1r/pppp1ppp/5n2/4N3/4P3/8/PPPP1PPP/RNBQKB1R b KQkq - 0 3"
        );
    }

    #[test]
    fn render_movetext_numbers_moves() {
        let line = parse_mainline("1.e4 e5 2.Nf3").unwrap();
        let moves: Vec<_> = line.moves().copied().collect();
        assert_eq!(render_movetext(&line.start, &moves), "1. e4 e5 2. Nf3");
        let black_start = line.steps[1].0.clone();
        assert_eq!(render_movetext(&black_start, &moves[1..]), "1... e5 2. Nf3");
    }
}
