//! FEN, SAN and PGN parsing and rendering.

mod fen;
mod movetext;
mod pgn;
mod san;

pub use fen::{parse_fen, render_fen, FenError, START_FEN};
pub use movetext::{
    parse_mainline, parse_mainline_from, render_movetext, GameResult, Mainline, MainlineError,
    Movetext, MovetextError,
};
pub use pgn::{parse_pgn, render_pgn, GameRecord, PgnError, PgnErrorKind, PgnReader};
pub use san::{parse_san, render_san, SanError};
