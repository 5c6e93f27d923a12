//! Streaming reader and writer for PGN export-format game files.
//!
//! Variations and comments are discarded; only the mainline is kept. A game
//! that fails to parse is reported with its byte offset and the reader moves
//! on to the next game.

use std::io::BufRead;

use thiserror::Error;

use super::fen::{parse_fen, render_fen, FenError};
use super::movetext::{render_movetext, resolve_tokens, GameResult, MainlineError, Movetext};
use crate::chess::{Move, Position};

#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    /// Tag pairs in file order, values verbatim.
    pub headers: Vec<(String, String)>,
    pub start: Position,
    pub moves: Vec<Move>,
    pub result: GameResult,
}

impl GameRecord {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    /// Each `(position before move, move)` pair of the mainline.
    pub fn positions(&self) -> impl Iterator<Item = (Position, Move)> + '_ {
        let mut pos = self.start.clone();
        self.moves.iter().map(move |m| {
            let before = pos.clone();
            pos = pos.play_unchecked(m);
            (before, *m)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgnErrorKind {
    #[error("malformed tag pair: {0}")]
    Tag(String),
    #[error("bad FEN tag: {0}")]
    Fen(#[from] FenError),
    #[error(transparent)]
    Movetext(#[from] MainlineError),
    #[error("game is missing its result termination marker")]
    MissingResult,
    #[error("read failure: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("game {game} at byte {offset}: {kind}")]
pub struct PgnError {
    /// Zero-based index of the game in the stream.
    pub game: usize,
    /// Byte offset of the game's first line.
    pub offset: u64,
    pub kind: PgnErrorKind,
}

/// Lazily yields games from a PGN byte stream.
pub struct PgnReader<R> {
    reader: R,
    offset: u64,
    games: usize,
    pending: Option<(u64, String)>,
    done: bool,
}

/// Reads games from `reader`. Per-game failures are yielded as `Err` items.
pub fn parse_pgn<R: BufRead>(reader: R) -> PgnReader<R> {
    PgnReader {
        reader,
        offset: 0,
        games: 0,
        pending: None,
        done: false,
    }
}

struct Chunk {
    offset: u64,
    text: String,
}

impl<R: BufRead> PgnReader<R> {
    fn read_line(&mut self) -> Result<Option<(u64, String)>, PgnError> {
        if let Some(line) = self.pending.take() {
            return Ok(Some(line));
        }
        let mut buf = Vec::new();
        let n = self.reader.read_until(b'\n', &mut buf).map_err(|e| PgnError {
            game: self.games,
            offset: self.offset,
            kind: PgnErrorKind::Io(e.to_string()),
        })?;
        if n == 0 {
            return Ok(None);
        }
        let start = self.offset;
        self.offset += n as u64;
        let mut line = String::from_utf8_lossy(&buf).into_owned();
        if start == 0 {
            if let Some(stripped) = line.strip_prefix('\u{feff}') {
                line = stripped.to_string();
            }
        }
        Ok(Some((start, line)))
    }

    /// Collects the raw text of the next game.
    fn next_chunk(&mut self) -> Result<Option<Chunk>, PgnError> {
        let mut text = String::new();
        let mut offset = None;
        let mut seen_movetext = false;
        let mut brace_open = false;
        while let Some((line_offset, line)) = self.read_line()? {
            let trimmed = line.trim();
            if !brace_open && trimmed.starts_with('[') && seen_movetext {
                self.pending = Some((line_offset, line));
                break;
            }
            if trimmed.is_empty() && offset.is_none() {
                continue;
            }
            if trimmed.starts_with('%') && !brace_open {
                continue;
            }
            offset.get_or_insert(line_offset);
            if !brace_open && !trimmed.starts_with('[') && !trimmed.is_empty() {
                seen_movetext = true;
            }
            for c in line.chars() {
                match c {
                    '{' => brace_open = true,
                    '}' => brace_open = false,
                    _ => {}
                }
            }
            text.push_str(&line);
            if seen_movetext && !brace_open && ends_with_result(trimmed) {
                break;
            }
        }
        Ok(offset.map(|offset| Chunk { offset, text }))
    }

    fn parse_chunk(&self, chunk: &Chunk) -> Result<GameRecord, PgnErrorKind> {
        let mut headers = Vec::new();
        let mut movetext = String::new();
        let mut in_tags = true;
        for line in chunk.text.lines() {
            let trimmed = line.trim();
            if in_tags && trimmed.starts_with('[') {
                headers.push(parse_tag(trimmed)?);
            } else {
                in_tags = false;
                movetext.push_str(line);
                movetext.push('\n');
            }
        }
        let start = headers
            .iter()
            .find(|(k, _)| k == "FEN")
            .map(|(_, v)| parse_fen(v))
            .transpose()?
            .unwrap_or_else(Position::startpos);
        let parsed = Movetext::parse(&movetext).map_err(MainlineError::from)?;
        let result = parsed.result.ok_or(PgnErrorKind::MissingResult)?;
        let line = resolve_tokens(start.clone(), &parsed.tokens)?;
        Ok(GameRecord {
            headers,
            start,
            moves: line.moves().copied().collect(),
            result,
        })
    }
}

fn ends_with_result(line: &str) -> bool {
    line.split_whitespace()
        .last()
        .is_some_and(|t| GameResult::parse(t).is_some())
}

fn parse_tag(line: &str) -> Result<(String, String), PgnErrorKind> {
    let bad = || PgnErrorKind::Tag(line.to_string());
    let inner = line
        .strip_prefix('[')
        .and_then(|l| l.strip_suffix(']'))
        .ok_or_else(bad)?
        .trim();
    let (name, rest) = inner.split_once(char::is_whitespace).ok_or_else(bad)?;
    let rest = rest.trim();
    let value = rest
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .ok_or_else(bad)?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(bad());
    }
    let mut out = String::with_capacity(value.len());
    let mut chars = value.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            out.push(chars.next().ok_or_else(bad)?);
        } else {
            out.push(c);
        }
    }
    Ok((name.to_string(), out))
}

impl<R: BufRead> Iterator for PgnReader<R> {
    type Item = Result<GameRecord, PgnError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let chunk = match self.next_chunk() {
            Ok(Some(c)) => c,
            Ok(None) => {
                self.done = true;
                return None;
            }
            Err(e) => {
                self.done = true;
                return Some(Err(e));
            }
        };
        let game = self.games;
        self.games += 1;
        Some(self.parse_chunk(&chunk).map_err(|kind| PgnError {
            game,
            offset: chunk.offset,
            kind,
        }))
    }
}

fn escape_tag(value: &str) -> String {
    value.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders a game in export format: tags, a blank line, then wrapped movetext.
pub fn render_pgn(record: &GameRecord) -> String {
    let mut out = String::new();
    for (k, v) in &record.headers {
        out.push_str(&format!("[{k} \"{}\"]\n", escape_tag(v)));
    }
    if record.start != Position::startpos() && record.header("FEN").is_none() {
        out.push_str(&format!("[SetUp \"1\"]\n[FEN \"{}\"]\n", render_fen(&record.start)));
    }
    out.push('\n');
    let movetext = render_movetext(&record.start, &record.moves);
    let mut line_len = 0;
    let mut body = String::new();
    for word in movetext
        .split(' ')
        .filter(|w| !w.is_empty())
        .chain(std::iter::once(record.result.as_str()))
    {
        if line_len > 0 && line_len + 1 + word.len() > 79 {
            body.push('\n');
            line_len = 0;
        } else if line_len > 0 {
            body.push(' ');
            line_len += 1;
        }
        body.push_str(word);
        line_len += word.len();
    }
    out.push_str(&body);
    out.push_str("\n\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::render_san;

    const TWO_GAMES: &str = r#"[Event "Casual"]
[White "A"]
[Black "B"]
[Result "1-0"]

1. e4 e5 2. Nf3 Nc6 3. Bb5 {Spanish} a6 (3... Nf6 4. O-O) 4. Ba4 1-0

[Event "Casual"]
[Result "0-1"]

1. f3 e5 2. g4 Qh4# 0-1
"#;

    #[test]
    fn reads_two_games() {
        let games: Vec<_> = parse_pgn(TWO_GAMES.as_bytes()).collect();
        assert_eq!(games.len(), 2);
        let first = games[0].as_ref().unwrap();
        assert_eq!(first.header("White"), Some("A"));
        assert_eq!(first.moves.len(), 7);
        assert_eq!(first.result, GameResult::WhiteWins);
        let second = games[1].as_ref().unwrap();
        assert_eq!(second.result, GameResult::BlackWins);
        let last = second.positions().last().unwrap();
        assert_eq!(render_san(&last.0, &last.1), "Qh4#");
    }

    #[test]
    fn truncated_final_game_reports_error() {
        let text = format!("{TWO_GAMES}\n[Event \"Cut\"]\n\n1. d4 d5 2. c4 e6 3. Nc");
        let games: Vec<_> = parse_pgn(text.as_bytes()).collect();
        assert_eq!(games.len(), 3);
        assert_eq!(games.iter().filter(|g| g.is_ok()).count(), 2);
        let err = games[2].as_ref().unwrap_err();
        assert_eq!(err.game, 2);
        assert!(err.offset > 0);
    }

    #[test]
    fn bad_game_does_not_stop_stream() {
        let text = "[Event \"x\"]\n\n1. e4 e5 2. Ke3 1-0\n\n[Event \"y\"]\n\n1. d4 *\n";
        let games: Vec<_> = parse_pgn(text.as_bytes()).collect();
        assert_eq!(games.len(), 2);
        assert!(matches!(
            games[0].as_ref().unwrap_err().kind,
            PgnErrorKind::Movetext(MainlineError::Ply { ply: 3, .. })
        ));
        assert_eq!(games[1].as_ref().unwrap().moves.len(), 1);
    }

    #[test]
    fn multiline_comment_with_bracket() {
        let text = "[Event \"x\"]\n\n1. e4 {a comment\n[not a tag]} e5 1/2-1/2\n";
        let games: Vec<_> = parse_pgn(text.as_bytes()).collect();
        assert_eq!(games.len(), 1);
        assert_eq!(games[0].as_ref().unwrap().result, GameResult::Draw);
    }

    #[test]
    fn tagless_games_split_on_result() {
        let text = "1. e4 e5 1-0\n1. d4 d5 0-1\n";
        let games: Vec<_> = parse_pgn(text.as_bytes()).collect();
        assert_eq!(games.len(), 2);
    }

    #[test]
    fn fen_tag_sets_start() {
        let text = "[SetUp \"1\"]\n[FEN \"4k3/8/8/8/8/8/8/R3K3 w - - 0 1\"]\n\n1. Ra8+ Kd7 *\n";
        let game = parse_pgn(text.as_bytes()).next().unwrap().unwrap();
        assert_eq!(game.moves.len(), 2);
        let rendered = render_pgn(&game);
        let again = parse_pgn(rendered.as_bytes()).next().unwrap().unwrap();
        assert_eq!(again, game);
    }

    #[test]
    fn escaped_tag_values() {
        let (k, v) = parse_tag(r#"[Annotator "The \"Oracle\" \\ bot"]"#).unwrap();
        assert_eq!(k, "Annotator");
        assert_eq!(v, r#"The "Oracle" \ bot"#);
        assert!(parse_tag("[Broken]").is_err());
        assert!(parse_tag("[Event unquoted]").is_err());
    }

    #[test]
    fn render_roundtrip() {
        for game in parse_pgn(TWO_GAMES.as_bytes()) {
            let game = game.unwrap();
            let text = render_pgn(&game);
            let again = parse_pgn(text.as_bytes()).next().unwrap().unwrap();
            assert_eq!(again.moves, game.moves);
            assert_eq!(again.headers, game.headers);
            assert_eq!(again.result, game.result);
        }
    }
}
