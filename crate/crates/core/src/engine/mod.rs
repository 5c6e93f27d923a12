//! UCI engine bridge: a process-backed session, a deterministic mock engine
//! and a persistent evaluation cache.

mod cache;
mod mock;
mod score;
mod session;
pub mod uci;

use std::io;

use thiserror::Error;

pub use cache::{EvalCache, Evaluator};
pub use mock::{run_mock, MockBehavior, MockEngine, MockScript, MockScriptError, MOCK_IDENTITY};
pub use score::{EngineScore, SearchLimits};
pub use session::{AnalysisResult, EngineLaunch, EngineSession, PvLine, SessionOptions};

use crate::chess::{Position, PositionKey};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("failed to launch engine '{program}': {source}")]
    Launch { program: String, source: io::Error },
    #[error("engine did not complete the UCI handshake within {0:?}")]
    HandshakeTimeout(std::time::Duration),
    #[error("search did not finish within {0:?}")]
    SearchTimeout(std::time::Duration),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("engine session is no longer usable")]
    SessionDead,
    #[error("search limits need a depth or a movetime and multipv >= 1")]
    InvalidLimits,
    #[error("move {0} is not legal in the analysed position")]
    IllegalMove(String),
    #[error("position has no legal moves")]
    Terminal,
    #[error("engine identity mismatch: expected '{expected}', engine reports '{found}'")]
    IdentityMismatch { expected: String, found: String },
    #[error("cache miss for {0} and no engine is configured")]
    NoEngine(String),
    #[error("evaluation cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Score of a position without legal moves, which is never sent to an
/// engine: a checkmated side to move is `Mate(-1)`, stalemate is level.
/// What an engine is shown of a position: the game state plus the halfmove
/// clock, which engines may take into account when scoring.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvalKey {
    pub position: PositionKey,
    pub halfmove: u32,
}

impl EvalKey {
    pub fn of(pos: &Position) -> EvalKey {
        EvalKey {
            position: pos.key(),
            halfmove: pos.halfmove_clock(),
        }
    }
}

pub fn terminal_score(pos: &Position) -> Option<EngineScore> {
    if !pos.legal_moves().is_empty() {
        return None;
    }
    Some(if pos.is_check() {
        EngineScore::Mate(-1)
    } else {
        EngineScore::Pawns(0.0)
    })
}
