use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::score::{EngineScore, SearchLimits};
use super::uci::{go_command, parse_engine_line, EngineMessage, ScoreBound};
use super::{terminal_score, EngineError};
use crate::chess::{Move, Position};
use crate::notation::render_fen;

/// How to start an engine process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineLaunch {
    pub program: PathBuf,
    pub args: Vec<OsString>,
}

impl EngineLaunch {
    pub fn new(program: impl Into<PathBuf>) -> EngineLaunch {
        EngineLaunch {
            program: program.into(),
            args: Vec::new(),
        }
    }

    pub fn arg(mut self, arg: impl Into<OsString>) -> EngineLaunch {
        self.args.push(arg.into());
        self
    }
}

#[derive(Clone, Debug)]
pub struct SessionOptions {
    pub handshake_timeout: Duration,
    /// Upper bound on a single `go`; movetime searches get their movetime
    /// added on top.
    pub search_timeout: Duration,
    /// How long to wait for `bestmove` after sending `stop`.
    pub stop_grace: Duration,
    pub multipv: u32,
    pub hash_mb: Option<u32>,
    pub extra_options: Vec<(String, String)>,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            handshake_timeout: Duration::from_secs(10),
            search_timeout: Duration::from_secs(600),
            stop_grace: Duration::from_secs(2),
            multipv: SearchLimits::default().multipv,
            hash_mb: None,
            extra_options: Vec::new(),
        }
    }
}

/// One principal variation reported by the engine.
#[derive(Clone, Debug, PartialEq)]
pub struct PvLine {
    pub rank: u32,
    pub first_move: Move,
    pub score: EngineScore,
    pub pv: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisResult {
    /// Sorted by rank; `lines[0]` is the engine's value of the position.
    pub lines: Vec<PvLine>,
    pub depth: u32,
    pub identity: String,
}

impl AnalysisResult {
    pub fn value(&self) -> EngineScore {
        self.lines[0].score
    }
}

/// A running engine process. At most one search is in flight at a time:
/// every search borrows the session mutably, and a search that could not be
/// stopped cleanly poisons the session.
pub struct EngineSession {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    identity: String,
    options: SessionOptions,
    multipv: u32,
    in_flight: bool,
    dead: bool,
}

impl EngineSession {
    pub fn open(launch: &EngineLaunch, options: SessionOptions) -> Result<EngineSession, EngineError> {
        let mut child = Command::new(&launch.program)
            .args(&launch.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| EngineError::Launch {
                program: launch.program.display().to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let mut session = EngineSession {
            child,
            stdin,
            lines: rx,
            identity: String::new(),
            multipv: options.multipv,
            options,
            in_flight: false,
            dead: false,
        };
        session.handshake()?;
        Ok(session)
    }

    fn handshake(&mut self) -> Result<(), EngineError> {
        let timeout = self.options.handshake_timeout;
        let deadline = Instant::now() + timeout;
        self.send("uci")?;
        loop {
            let line = self
                .recv_until(deadline)?
                .ok_or(EngineError::HandshakeTimeout(timeout))?;
            match parse_engine_line(&line)? {
                EngineMessage::IdName(name) => self.identity = name,
                EngineMessage::UciOk => break,
                _ => {}
            }
        }
        let mut opts = vec![("MultiPV".to_string(), self.multipv.to_string())];
        if let Some(mb) = self.options.hash_mb {
            opts.push(("Hash".to_string(), mb.to_string()));
        }
        opts.extend(self.options.extra_options.iter().cloned());
        for (name, value) in opts {
            self.send(&format!("setoption name {name} value {value}"))?;
        }
        self.send("isready")?;
        self.wait_ready(deadline)
            .map_err(|e| match e {
                EngineError::SearchTimeout(_) => EngineError::HandshakeTimeout(timeout),
                e => e,
            })
    }

    fn wait_ready(&mut self, deadline: Instant) -> Result<(), EngineError> {
        loop {
            match self.recv_until(deadline)? {
                None => {
                    return Err(EngineError::SearchTimeout(
                        deadline.saturating_duration_since(Instant::now()),
                    ))
                }
                Some(line) => {
                    if parse_engine_line(&line)? == EngineMessage::ReadyOk {
                        return Ok(());
                    }
                }
            }
        }
    }

    /// Engine name from `id name`.
    pub fn identity(&self) -> &str {
        &self.identity
    }

    fn send(&mut self, cmd: &str) -> Result<(), EngineError> {
        debug!("uci> {cmd}");
        let res = writeln!(self.stdin, "{cmd}").and_then(|_| self.stdin.flush());
        if res.is_err() {
            self.dead = true;
            return Err(EngineError::SessionDead);
        }
        Ok(())
    }

    /// Next line before `deadline`; `None` on timeout.
    fn recv_until(&mut self, deadline: Instant) -> Result<Option<String>, EngineError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(line) => {
                debug!("uci< {line}");
                Ok(Some(line))
            }
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                self.dead = true;
                Err(EngineError::SessionDead)
            }
        }
    }

    /// Searches `pos` and returns the top lines at the deepest depth for
    /// which every requested line was reported.
    pub fn evaluate(
        &mut self,
        pos: &Position,
        limits: &SearchLimits,
    ) -> Result<AnalysisResult, EngineError> {
        let go = go_command(limits)?;
        if self.dead {
            return Err(EngineError::SessionDead);
        }
        if terminal_score(pos).is_some() {
            return Err(EngineError::Terminal);
        }
        if limits.multipv != self.multipv {
            self.send(&format!("setoption name MultiPV value {}", limits.multipv))?;
            self.multipv = limits.multipv;
        }
        self.send(&format!("position fen {}", render_fen(pos)))?;
        self.send(&go)?;
        self.in_flight = true;
        let result = self.collect(pos, limits);
        if self.in_flight {
            // The engine may still be searching; nothing else can be sent.
            self.dead = true;
        }
        result
    }

    fn collect(&mut self, pos: &Position, limits: &SearchLimits) -> Result<AnalysisResult, EngineError> {
        let mut budget = self.options.search_timeout;
        if let Some(ms) = limits.movetime_ms {
            budget += Duration::from_millis(ms);
        }
        let deadline = Instant::now() + budget;
        // depth -> rank -> (score, pv)
        let mut by_depth: BTreeMap<u32, BTreeMap<u32, (EngineScore, Vec<String>)>> =
            BTreeMap::new();
        let best = loop {
            let Some(line) = self.recv_until(deadline)? else {
                self.abort_search();
                return Err(EngineError::SearchTimeout(budget));
            };
            match parse_engine_line(&line)? {
                EngineMessage::Info(info) => {
                    let (Some(depth), Some((score, ScoreBound::Exact))) = (info.depth, info.score)
                    else {
                        continue;
                    };
                    let rank = info.multipv.unwrap_or(1);
                    by_depth
                        .entry(depth)
                        .or_default()
                        .insert(rank, (score, info.pv));
                }
                EngineMessage::BestMove(m) => break m,
                _ => {}
            }
        };
        self.in_flight = false;

        let wanted = (limits.multipv as usize).min(pos.legal_moves().len());
        let complete = by_depth
            .iter()
            .rev()
            .find(|(_, lines)| (1..=wanted as u32).all(|r| lines.contains_key(&r)))
            .or_else(|| by_depth.iter().next_back());
        let Some((&depth, lines)) = complete else {
            return Err(EngineError::Protocol(format!("bestmove {best} without any scored info line")));
        };

        let mut out = Vec::new();
        for (&rank, (score, pv)) in lines.iter().take(wanted.max(1)) {
            let uci = match pv.first() {
                Some(m) => m.as_str(),
                None if rank == 1 => best.as_str(),
                None => {
                    return Err(EngineError::Protocol(format!("multipv {rank} line without a pv")))
                }
            };
            let first_move = pos
                .find_uci(uci)
                .ok_or_else(|| EngineError::Protocol(format!("engine move '{uci}' is not legal")))?;
            out.push(PvLine {
                rank,
                first_move,
                score: *score,
                pv: pv.clone(),
            });
        }
        Ok(AnalysisResult {
            lines: out,
            depth,
            identity: self.identity.clone(),
        })
    }

    /// Sends `stop` after a timeout and drains to `bestmove`. An engine that
    /// ignores `stop` leaves the session dead.
    fn abort_search(&mut self) {
        warn!("search timed out, sending stop");
        if self.send("stop").is_err() {
            return;
        }
        let deadline = Instant::now() + self.options.stop_grace;
        loop {
            match self.recv_until(deadline) {
                Ok(Some(line)) => {
                    if matches!(parse_engine_line(&line), Ok(EngineMessage::BestMove(_))) {
                        self.in_flight = false;
                        return;
                    }
                }
                Ok(None) | Err(_) => return,
            }
        }
    }

    /// Scores each move by searching its child position independently and
    /// negating the child's score into the mover's perspective.
    pub fn evaluate_moves(
        &mut self,
        pos: &Position,
        moves: &[Move],
        limits: &SearchLimits,
    ) -> Vec<(Move, Result<EngineScore, EngineError>)> {
        let child_limits = SearchLimits {
            multipv: 1,
            ..*limits
        };
        let legal = pos.legal_moves();
        moves
            .iter()
            .map(|m| {
                let score = if !legal.contains(m) {
                    Err(EngineError::IllegalMove(m.uci()))
                } else {
                    let child = pos.play_unchecked(m);
                    match terminal_score(&child) {
                        Some(s) => go_command(limits).map(|_| s.flipped()),
                        None => self
                            .evaluate(&child, &child_limits)
                            .map(|r| r.value().flipped()),
                    }
                };
                (*m, score)
            })
            .collect()
    }

    pub fn is_alive(&self) -> bool {
        !self.dead
    }
}

impl Drop for EngineSession {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "quit").and_then(|_| self.stdin.flush());
        let deadline = Instant::now() + Duration::from_millis(500);
        while Instant::now() < deadline {
            match self.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) => thread::sleep(Duration::from_millis(5)),
                Err(_) => break,
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
