//! A deterministic UCI engine driven by a position-keyed score script.
//!
//! Script format, one entry per line:
//!
//! ```text
//! # comment
//! <FEN> ; cp <centipawns>
//! <FEN> ; mate <moves>
//! ```
//!
//! Scores are from the side to move in the FEN. Entries are keyed by game
//! state and halfmove clock. Positions missing from the
//! script get a fixed pseudo-random score derived from their key, so every
//! response is a pure function of the position, the limits and MultiPV.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::score::EngineScore;
use super::{terminal_score, EvalKey};
use super::uci::parse_go;
use crate::chess::{Move, Position};
use crate::notation::{parse_fen, parse_san, render_fen, FenError};

pub const MOCK_IDENTITY: &str = "mock-oracle";

#[derive(Debug, Error)]
pub enum MockScriptError {
    #[error("line {line}: expected '<FEN> ; cp N' or '<FEN> ; mate N'")]
    Syntax { line: usize },
    #[error("line {line}: {source}")]
    Fen { line: usize, source: FenError },
    #[error("conflicting scores for {fen}: {old} vs {new}")]
    Conflict {
        fen: String,
        old: EngineScore,
        new: EngineScore,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MockScript {
    entries: BTreeMap<EvalKey, (String, EngineScore)>,
}

impl MockScript {
    pub fn new() -> MockScript {
        MockScript::default()
    }

    pub fn parse(text: &str) -> Result<MockScript, MockScriptError> {
        let mut script = MockScript::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (fen, score) = body.split_once(';').ok_or(MockScriptError::Syntax { line })?;
            let mut words = score.split_whitespace();
            let (Some(kind), Some(value), None) = (words.next(), words.next(), words.next()) else {
                return Err(MockScriptError::Syntax { line });
            };
            let score = EngineScore::parse_uci(kind, value).ok_or(MockScriptError::Syntax { line })?;
            let pos = parse_fen(fen.trim()).map_err(|source| MockScriptError::Fen { line, source })?;
            script.insert(&pos, score)?;
        }
        Ok(script)
    }

    /// Adds an entry; re-adding an identical score is a no-op.
    pub fn insert(&mut self, pos: &Position, score: EngineScore) -> Result<(), MockScriptError> {
        let fen = render_fen(pos);
        match self.entries.get(&EvalKey::of(pos)) {
            Some((_, old)) if *old != score => Err(MockScriptError::Conflict {
                fen,
                old: *old,
                new: score,
            }),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(EvalKey::of(pos), (fen, score));
                Ok(())
            }
        }
    }

    pub fn get(&self, pos: &Position) -> Option<EngineScore> {
        self.entries.get(&EvalKey::of(pos)).map(|(_, s)| *s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical text form, ordered by position key.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (fen, score) in self.entries.values() {
            out.push_str(&format!("{fen} ; {}\n", score.to_uci()));
        }
        out
    }

    /// Scripted score or the deterministic fallback.
    pub fn score(&self, pos: &Position) -> EngineScore {
        self.get(pos).unwrap_or_else(|| {
            let k = pos.key().0 % 61;
            EngineScore::from_centipawns(k as i64 - 30)
        })
    }
}

/// Failure modes for exercising client error paths.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct MockBehavior {
    /// Never answer `uci`.
    pub silent_handshake: bool,
    /// Emit nothing after `go` until `stop`.
    pub hang_search: bool,
    /// Ignore `stop` (combined with `hang_search`, the search never ends).
    pub ignore_stop: bool,
}

/// The engine as a line-in, lines-out state machine.
pub struct MockEngine {
    script: MockScript,
    behavior: MockBehavior,
    multipv: u32,
    position: Option<Position>,
    pending: Option<String>,
    /// `setoption` commands seen, as (name, value).
    pub options: Vec<(String, String)>,
    pub finished: bool,
}

impl MockEngine {
    pub fn new(script: MockScript, behavior: MockBehavior) -> MockEngine {
        MockEngine {
            script,
            behavior,
            multipv: 1,
            position: None,
            pending: None,
            options: Vec::new(),
            finished: false,
        }
    }

    pub fn handle(&mut self, command: &str) -> Vec<String> {
        let command = command.trim();
        let head = command.split_whitespace().next().unwrap_or("");
        match head {
            "uci" if self.behavior.silent_handshake => vec![],
            "uci" => vec![
                format!("id name {MOCK_IDENTITY}"),
                "id author gambit".into(),
                "option name MultiPV type spin default 1 min 1 max 500".into(),
                "option name Hash type spin default 16 min 1 max 33554432".into(),
                "uciok".into(),
            ],
            "isready" => vec!["readyok".into()],
            "setoption" => {
                self.set_option(command);
                vec![]
            }
            "ucinewgame" => {
                self.position = None;
                vec![]
            }
            "position" => {
                self.position = parse_position_command(command);
                vec![]
            }
            "go" => {
                let out = self.search(command);
                if self.behavior.hang_search {
                    self.pending = out.last().cloned();
                    vec![]
                } else {
                    out
                }
            }
            "stop" if self.behavior.ignore_stop => vec![],
            "stop" => self.pending.take().into_iter().collect(),
            "quit" => {
                self.finished = true;
                vec![]
            }
            _ => vec![],
        }
    }

    fn set_option(&mut self, command: &str) {
        let rest = command.strip_prefix("setoption").unwrap_or("").trim();
        let rest = rest.strip_prefix("name").unwrap_or(rest).trim();
        let (name, value) = match rest.split_once(" value ") {
            Some((n, v)) => (n.trim(), v.trim()),
            None => (rest, ""),
        };
        if name.eq_ignore_ascii_case("MultiPV") {
            if let Ok(n) = value.parse::<u32>() {
                self.multipv = n.max(1);
            }
        }
        self.options.push((name.to_string(), value.to_string()));
    }

    fn search(&self, command: &str) -> Vec<String> {
        let limits = parse_go(command, self.multipv);
        let depth = limits.depth.unwrap_or(1);
        let pos = self.position.clone().unwrap_or_else(Position::startpos);
        if let Some(s) = terminal_score(&pos) {
            let score = if s == EngineScore::Mate(-1) {
                "mate 0".to_string()
            } else {
                s.to_uci()
            };
            return vec![format!("info depth 0 score {score}"), "bestmove (none)".into()];
        }

        let mut lines: Vec<(Move, EngineScore)> = pos
            .legal_moves()
            .into_iter()
            .map(|m| {
                let child = pos.play_unchecked(&m);
                let s = terminal_score(&child).unwrap_or_else(|| self.script.score(&child));
                (m, s.flipped())
            })
            .collect();
        lines.sort_by(|a, b| b.1.compare(a.1).then_with(|| a.0.uci().cmp(&b.0.uci())));
        lines.truncate(self.multipv as usize);
        if let Some(v) = self.script.get(&pos) {
            lines[0].1 = v;
        }

        let mut out: Vec<String> = lines
            .iter()
            .enumerate()
            .map(|(i, (m, s))| {
                format!(
                    "info depth {depth} seldepth {depth} multipv {} score {} pv {}",
                    i + 1,
                    s.to_uci(),
                    m.uci()
                )
            })
            .collect();
        out.push(format!("bestmove {}", lines[0].0.uci()));
        out
    }
}

/// Parses `position startpos|fen <FEN> [moves ...]`.
fn parse_position_command(command: &str) -> Option<Position> {
    let rest = command.strip_prefix("position")?.trim();
    let (setup, moves) = match rest.split_once("moves") {
        Some((s, m)) => (s.trim(), m.trim()),
        None => (rest, ""),
    };
    let mut pos = if setup == "startpos" {
        Position::startpos()
    } else {
        parse_fen(setup.strip_prefix("fen")?.trim()).ok()?
    };
    for mv in moves.split_whitespace() {
        let m = pos.find_uci(mv).or_else(|| parse_san(&pos, mv).ok())?;
        pos = pos.play_unchecked(&m);
    }
    Some(pos)
}

/// Runs the mock engine over a pair of streams until `quit` or end of input.
pub fn run_mock<R: BufRead, W: Write>(
    script: MockScript,
    behavior: MockBehavior,
    input: R,
    mut output: W,
) -> io::Result<()> {
    let mut engine = MockEngine::new(script, behavior);
    for line in input.lines() {
        for out in engine.handle(&line?) {
            writeln!(output, "{out}")?;
        }
        output.flush()?;
        if engine.finished {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::START_FEN;

    fn script_startpos() -> MockScript {
        MockScript::parse(&format!("# opening\n{START_FEN} ; cp 20\n")).unwrap()
    }

    #[test]
    fn script_parse_and_render() {
        let s = script_startpos();
        assert_eq!(s.get(&Position::startpos()), Some(EngineScore::Pawns(0.2)));
        assert_eq!(MockScript::parse(&s.render()).unwrap(), s);
        assert!(matches!(
            MockScript::parse("nonsense"),
            Err(MockScriptError::Syntax { line: 1 })
        ));
        assert!(matches!(
            MockScript::parse(&format!("{START_FEN} ; mate 0")),
            Err(MockScriptError::Syntax { .. })
        ));
    }

    #[test]
    fn conflicting_duplicates_rejected() {
        let text = format!("{START_FEN} ; cp 20\n{START_FEN} ; cp 20\n");
        assert!(MockScript::parse(&text).is_ok());
        let text = format!("{START_FEN} ; cp 20\n{START_FEN} ; cp 21\n");
        assert!(matches!(MockScript::parse(&text), Err(MockScriptError::Conflict { .. })));
    }

    #[test]
    fn engine_is_pure() {
        let run = || {
            let mut e = MockEngine::new(script_startpos(), MockBehavior::default());
            let mut out = Vec::new();
            for cmd in ["uci", "setoption name MultiPV value 5", "isready", "position startpos", "go depth 7"] {
                out.extend(e.handle(cmd));
            }
            out
        };
        let a = run();
        assert_eq!(a, run());
        let infos: Vec<_> = a.iter().filter(|l| l.starts_with("info")).collect();
        assert_eq!(infos.len(), 5);
        assert!(infos[0].contains("multipv 1 score cp 20"));
        assert!(a.last().unwrap().starts_with("bestmove "));
    }

    #[test]
    fn hang_and_stop() {
        let behavior = MockBehavior {
            hang_search: true,
            ..MockBehavior::default()
        };
        let mut e = MockEngine::new(MockScript::new(), behavior);
        e.handle("position startpos moves e2e4");
        assert!(e.handle("go depth 3").is_empty());
        let out = e.handle("stop");
        assert_eq!(out.len(), 1);
        assert!(out[0].starts_with("bestmove"));
    }

    #[test]
    fn position_with_moves() {
        let p = parse_position_command("position startpos moves e2e4 e7e5").unwrap();
        assert_eq!(
            render_fen(&p),
            "rnbqkbnr/pppp1ppp/8/4p3/4P3/8/PPPP1PPP/RNBQKBNR w KQkq e6 0 2"
        );
        assert!(parse_position_command("position fen garbage").is_none());
    }
}
