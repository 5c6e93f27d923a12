//! UCI wire format: parsing engine output lines and rendering commands.

use super::score::{EngineScore, SearchLimits};
use super::EngineError;

/// Bound qualifier attached to an `info ... score` field.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ScoreBound {
    Exact,
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfoLine {
    pub depth: Option<u32>,
    pub multipv: Option<u32>,
    pub score: Option<(EngineScore, ScoreBound)>,
    /// Principal variation in long algebraic notation.
    pub pv: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EngineMessage {
    IdName(String),
    IdAuthor(String),
    Option(String),
    UciOk,
    ReadyOk,
    Info(InfoLine),
    BestMove(String),
    /// Anything else; UCI requires unknown output to be ignored.
    Other(String),
}

fn violation(line: &str, why: &str) -> EngineError {
    EngineError::Protocol(format!("{why}: '{line}'"))
}

/// Parses one line of engine output.
pub fn parse_engine_line(line: &str) -> Result<EngineMessage, EngineError> {
    let line = line.trim();
    let mut words = line.split_whitespace();
    let Some(head) = words.next() else {
        return Ok(EngineMessage::Other(String::new()));
    };
    match head {
        "id" => {
            let rest: Vec<&str> = words.collect();
            match rest.split_first() {
                Some((&"name", name)) => Ok(EngineMessage::IdName(name.join(" "))),
                Some((&"author", author)) => Ok(EngineMessage::IdAuthor(author.join(" "))),
                _ => Ok(EngineMessage::Other(line.to_string())),
            }
        }
        "option" => Ok(EngineMessage::Option(line.to_string())),
        "uciok" => Ok(EngineMessage::UciOk),
        "readyok" => Ok(EngineMessage::ReadyOk),
        "bestmove" => {
            let mv = words
                .next()
                .ok_or_else(|| violation(line, "bestmove without a move"))?;
            Ok(EngineMessage::BestMove(mv.to_string()))
        }
        "info" => parse_info(line, words).map(EngineMessage::Info),
        _ => Ok(EngineMessage::Other(line.to_string())),
    }
}

fn parse_info<'a>(
    line: &str,
    mut words: impl Iterator<Item = &'a str>,
) -> Result<InfoLine, EngineError> {
    let mut info = InfoLine {
        depth: None,
        multipv: None,
        score: None,
        pv: Vec::new(),
    };
    let number = |w: Option<&str>, what: &str| -> Result<u32, EngineError> {
        w.and_then(|v| v.parse().ok())
            .ok_or_else(|| violation(line, &format!("bad {what}")))
    };
    while let Some(w) = words.next() {
        match w {
            "depth" => info.depth = Some(number(words.next(), "depth")?),
            "multipv" => info.multipv = Some(number(words.next(), "multipv")?),
            "score" => {
                let kind = words.next().unwrap_or_default();
                let value = words.next().unwrap_or_default();
                let score = EngineScore::parse_uci(kind, value)
                    .ok_or_else(|| violation(line, "bad score"))?;
                info.score = Some((score, ScoreBound::Exact));
            }
            "lowerbound" => {
                if let Some((s, _)) = info.score {
                    info.score = Some((s, ScoreBound::Lower));
                }
            }
            "upperbound" => {
                if let Some((s, _)) = info.score {
                    info.score = Some((s, ScoreBound::Upper));
                }
            }
            "pv" => {
                info.pv = words.by_ref().map(str::to_string).collect();
            }
            // Free text runs to the end of the line.
            "string" => break,
            _ => {}
        }
    }
    Ok(info)
}

/// Renders the `go` command for `limits`.
pub fn go_command(limits: &SearchLimits) -> Result<String, EngineError> {
    if !limits.is_valid() {
        return Err(EngineError::InvalidLimits);
    }
    let mut cmd = String::from("go");
    if let Some(d) = limits.depth {
        cmd.push_str(&format!(" depth {d}"));
    }
    if let Some(t) = limits.movetime_ms {
        cmd.push_str(&format!(" movetime {t}"));
    }
    Ok(cmd)
}

/// Parses the limits back out of a `go` command (used by the mock engine).
pub fn parse_go(line: &str, multipv: u32) -> SearchLimits {
    let mut limits = SearchLimits {
        depth: None,
        movetime_ms: None,
        multipv,
    };
    let mut words = line.split_whitespace().skip(1);
    while let Some(w) = words.next() {
        match w {
            "depth" => limits.depth = words.next().and_then(|v| v.parse().ok()),
            "movetime" => limits.movetime_ms = words.next().and_then(|v| v.parse().ok()),
            _ => {}
        }
    }
    limits
}
