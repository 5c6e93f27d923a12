//! Chess rules: board state, legal move generation, move application and
//! position hashing.

mod position;
mod types;
mod zobrist;

pub use position::{perft, IllegalMove, Position, PositionError};
pub use types::{CastlingRights, CastlingSide, Color, Move, MoveKind, Piece, Role, Square};
pub use zobrist::{position_key, PositionKey};

/// Every legal move in `pos`.
pub fn legal_moves(pos: &Position) -> Vec<Move> {
    pos.legal_moves()
}

/// Applies a legal move, leaving `pos` untouched.
pub fn apply_move(pos: &Position, m: &Move) -> Result<Position, IllegalMove> {
    pos.apply_move(m)
}
