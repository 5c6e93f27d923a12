use thiserror::Error;

use super::types::{CastlingRights, CastlingSide, Color, Move, MoveKind, Piece, Role, Square};
use super::zobrist::{self, PositionKey};

const KNIGHT_STEPS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];
const KING_STEPS: [(i8, i8); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const ROOK_RAYS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const BISHOP_RAYS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Reasons a piece placement cannot form a legal chess position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PositionError {
    #[error("{0} must have exactly one king, found {1}")]
    KingCount(Color, usize),
    #[error("pawn on back rank at {0}")]
    PawnOnBackRank(Square),
    #[error("side not to move ({0}) is in check")]
    OpponentInCheck(Color),
    #[error("invalid en passant square {0}")]
    BadEnPassant(Square),
    #[error("castling right without king and rook on home squares ({0} {1:?})")]
    BadCastlingRights(Color, CastlingSide),
    #[error("fullmove number must be at least 1")]
    BadFullmove,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal move {mv} in position {fen}")]
pub struct IllegalMove {
    pub mv: String,
    pub fen: String,
}

/// Complete chess state. Only constructible through validated paths, so every
/// value satisfies the position invariants.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Position {
    board: [Option<Piece>; 64],
    turn: Color,
    castling: CastlingRights,
    ep_square: Option<Square>,
    halfmove_clock: u32,
    fullmove_number: u32,
    kings: [Square; 2],
}

impl Default for Position {
    fn default() -> Self {
        Position::startpos()
    }
}

impl Position {
    pub fn startpos() -> Position {
        let mut board = [None; 64];
        let back = [
            Role::Rook,
            Role::Knight,
            Role::Bishop,
            Role::Queen,
            Role::King,
            Role::Bishop,
            Role::Knight,
            Role::Rook,
        ];
        for (file, role) in back.iter().enumerate() {
            board[file] = Some(Piece::new(Color::White, *role));
            board[8 + file] = Some(Piece::new(Color::White, Role::Pawn));
            board[48 + file] = Some(Piece::new(Color::Black, Role::Pawn));
            board[56 + file] = Some(Piece::new(Color::Black, *role));
        }
        Position {
            board,
            turn: Color::White,
            castling: CastlingRights::ALL,
            ep_square: None,
            halfmove_clock: 0,
            fullmove_number: 1,
            kings: [Square::E1, Square::E8],
        }
    }

    /// Builds a position from raw parts, checking every invariant.
    pub fn from_parts(
        board: [Option<Piece>; 64],
        turn: Color,
        castling: CastlingRights,
        ep_square: Option<Square>,
        halfmove_clock: u32,
        fullmove_number: u32,
    ) -> Result<Position, PositionError> {
        let mut kings = [Square::A1; 2];
        for color in Color::ALL {
            let found: Vec<Square> = Square::all()
                .filter(|sq| board[sq.index()] == Some(Piece::new(color, Role::King)))
                .collect();
            if found.len() != 1 {
                return Err(PositionError::KingCount(color, found.len()));
            }
            kings[color.index()] = found[0];
        }
        for sq in Square::all() {
            if let Some(p) = board[sq.index()] {
                if p.role == Role::Pawn && (sq.rank() == 0 || sq.rank() == 7) {
                    return Err(PositionError::PawnOnBackRank(sq));
                }
            }
        }
        if fullmove_number == 0 {
            return Err(PositionError::BadFullmove);
        }
        for color in Color::ALL {
            for side in [CastlingSide::King, CastlingSide::Queen] {
                if castling.has(color, side) {
                    let king_home =
                        Square::from_coords(4, color.back_rank()).expect("on board");
                    let rook_ok = board[side.rook_home(color).index()]
                        == Some(Piece::new(color, Role::Rook));
                    if kings[color.index()] != king_home || !rook_ok {
                        return Err(PositionError::BadCastlingRights(color, side));
                    }
                }
            }
        }
        if let Some(ep) = ep_square {
            // The pawn that just double-stepped belongs to the side not to move.
            let mover = !turn;
            let expected_rank = if mover == Color::White { 2 } else { 5 };
            let dir = mover.pawn_direction();
            let pawn_sq = ep.offset(0, dir);
            let origin = ep.offset(0, -dir);
            let ok = ep.rank() == expected_rank
                && board[ep.index()].is_none()
                && origin.is_some_and(|o| board[o.index()].is_none())
                && pawn_sq.is_some_and(|p| board[p.index()] == Some(Piece::new(mover, Role::Pawn)));
            if !ok {
                return Err(PositionError::BadEnPassant(ep));
            }
        }
        let pos = Position {
            board,
            turn,
            castling,
            ep_square,
            halfmove_clock,
            fullmove_number,
            kings,
        };
        if pos.is_attacked(pos.king(!turn), turn) {
            return Err(PositionError::OpponentInCheck(!turn));
        }
        Ok(pos)
    }

    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.board[sq.index()]
    }

    pub fn board(&self) -> &[Option<Piece>; 64] {
        &self.board
    }

    pub fn turn(&self) -> Color {
        self.turn
    }

    pub fn castling(&self) -> CastlingRights {
        self.castling
    }

    pub fn ep_square(&self) -> Option<Square> {
        self.ep_square
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove_clock
    }

    pub fn fullmove_number(&self) -> u32 {
        self.fullmove_number
    }

    pub fn king(&self, color: Color) -> Square {
        self.kings[color.index()]
    }

    /// Same position with different move clocks.
    pub fn with_clocks(&self, halfmove_clock: u32, fullmove_number: u32) -> Position {
        Position {
            halfmove_clock,
            fullmove_number: fullmove_number.max(1),
            ..self.clone()
        }
    }

    pub fn key(&self) -> PositionKey {
        zobrist::position_key(self)
    }

    pub fn is_check(&self) -> bool {
        self.is_attacked(self.king(self.turn), !self.turn)
    }

    pub fn is_checkmate(&self) -> bool {
        self.is_check() && self.legal_moves().is_empty()
    }

    pub fn is_stalemate(&self) -> bool {
        !self.is_check() && self.legal_moves().is_empty()
    }

    /// True when a pawn of the side to move could capture en passant (ignoring pins).
    pub fn ep_capture_possible(&self) -> bool {
        let Some(ep) = self.ep_square else {
            return false;
        };
        let dir = self.turn.pawn_direction();
        [-1, 1].iter().any(|&df| {
            ep.offset(df, -dir).is_some_and(|sq| {
                self.board[sq.index()] == Some(Piece::new(self.turn, Role::Pawn))
            })
        })
    }

    /// Whether `sq` is attacked by any piece of color `by`.
    pub fn is_attacked(&self, sq: Square, by: Color) -> bool {
        let dir = by.pawn_direction();
        for df in [-1, 1] {
            if let Some(from) = sq.offset(df, -dir) {
                if self.board[from.index()] == Some(Piece::new(by, Role::Pawn)) {
                    return true;
                }
            }
        }
        for (df, dr) in KNIGHT_STEPS {
            if let Some(from) = sq.offset(df, dr) {
                if self.board[from.index()] == Some(Piece::new(by, Role::Knight)) {
                    return true;
                }
            }
        }
        for (df, dr) in KING_STEPS {
            if let Some(from) = sq.offset(df, dr) {
                if self.board[from.index()] == Some(Piece::new(by, Role::King)) {
                    return true;
                }
            }
        }
        for (rays, slider) in [(ROOK_RAYS, Role::Rook), (BISHOP_RAYS, Role::Bishop)] {
            for (df, dr) in rays {
                let mut cur = sq;
                while let Some(next) = cur.offset(df, dr) {
                    if let Some(p) = self.board[next.index()] {
                        if p.color == by && (p.role == slider || p.role == Role::Queen) {
                            return true;
                        }
                        break;
                    }
                    cur = next;
                }
            }
        }
        false
    }

    /// All legal moves, in generation order.
    pub fn legal_moves(&self) -> Vec<Move> {
        let mut moves = Vec::with_capacity(48);
        self.pseudo_legal_moves(&mut moves);
        let us = self.turn;
        moves.retain(|m| {
            let next = self.play_unchecked(m);
            !next.is_attacked(next.king(us), !us)
        });
        moves
    }

    fn pseudo_legal_moves(&self, out: &mut Vec<Move>) {
        let us = self.turn;
        for from in Square::all() {
            let Some(piece) = self.board[from.index()] else {
                continue;
            };
            if piece.color != us {
                continue;
            }
            match piece.role {
                Role::Pawn => self.pawn_moves(from, out),
                Role::Knight => self.step_moves(from, &KNIGHT_STEPS, out),
                Role::King => {
                    self.step_moves(from, &KING_STEPS, out);
                    self.castling_moves(out);
                }
                Role::Bishop => self.slide_moves(from, &BISHOP_RAYS, out),
                Role::Rook => self.slide_moves(from, &ROOK_RAYS, out),
                Role::Queen => {
                    self.slide_moves(from, &ROOK_RAYS, out);
                    self.slide_moves(from, &BISHOP_RAYS, out);
                }
            }
        }
    }

    fn push_pawn_move(from: Square, to: Square, kind: MoveKind, out: &mut Vec<Move>) {
        if to.rank() == 0 || to.rank() == 7 {
            for role in Role::PROMOTIONS {
                out.push(Move {
                    from,
                    to,
                    promotion: Some(role),
                    kind,
                });
            }
        } else {
            out.push(Move {
                from,
                to,
                promotion: None,
                kind,
            });
        }
    }

    fn pawn_moves(&self, from: Square, out: &mut Vec<Move>) {
        let us = self.turn;
        let dir = us.pawn_direction();
        if let Some(one) = from.offset(0, dir) {
            if self.board[one.index()].is_none() {
                Self::push_pawn_move(from, one, MoveKind::Quiet, out);
                let start_rank = if us == Color::White { 1 } else { 6 };
                if from.rank() == start_rank {
                    if let Some(two) = one.offset(0, dir) {
                        if self.board[two.index()].is_none() {
                            out.push(Move {
                                from,
                                to: two,
                                promotion: None,
                                kind: MoveKind::DoublePush,
                            });
                        }
                    }
                }
            }
        }
        for df in [-1, 1] {
            if let Some(to) = from.offset(df, dir) {
                match self.board[to.index()] {
                    Some(p) if p.color != us => {
                        Self::push_pawn_move(from, to, MoveKind::Capture, out)
                    }
                    None if self.ep_square == Some(to) => out.push(Move {
                        from,
                        to,
                        promotion: None,
                        kind: MoveKind::EnPassant,
                    }),
                    _ => {}
                }
            }
        }
    }

    fn step_moves(&self, from: Square, steps: &[(i8, i8)], out: &mut Vec<Move>) {
        for &(df, dr) in steps {
            if let Some(to) = from.offset(df, dr) {
                match self.board[to.index()] {
                    None => out.push(Move {
                        from,
                        to,
                        promotion: None,
                        kind: MoveKind::Quiet,
                    }),
                    Some(p) if p.color != self.turn => out.push(Move {
                        from,
                        to,
                        promotion: None,
                        kind: MoveKind::Capture,
                    }),
                    _ => {}
                }
            }
        }
    }

    fn slide_moves(&self, from: Square, rays: &[(i8, i8)], out: &mut Vec<Move>) {
        for &(df, dr) in rays {
            let mut cur = from;
            while let Some(to) = cur.offset(df, dr) {
                match self.board[to.index()] {
                    None => out.push(Move {
                        from,
                        to,
                        promotion: None,
                        kind: MoveKind::Quiet,
                    }),
                    Some(p) => {
                        if p.color != self.turn {
                            out.push(Move {
                                from,
                                to,
                                promotion: None,
                                kind: MoveKind::Capture,
                            });
                        }
                        break;
                    }
                }
                cur = to;
            }
        }
    }

    fn castling_moves(&self, out: &mut Vec<Move>) {
        let us = self.turn;
        let king = self.king(us);
        for side in [CastlingSide::King, CastlingSide::Queen] {
            if !self.castling.has(us, side) {
                continue;
            }
            let rook = side.rook_home(us);
            let (lo, hi) = if rook.file() < king.file() {
                (rook.file() + 1, king.file())
            } else {
                (king.file() + 1, rook.file())
            };
            let rank = us.back_rank();
            let between_empty = (lo..hi).all(|f| {
                self.board[Square::from_coords(f, rank).unwrap().index()].is_none()
            });
            if !between_empty {
                continue;
            }
            let target = side.king_target(us);
            let step: i8 = if target.file() > king.file() { 1 } else { -1 };
            // King may not start in, pass through or land on an attacked square.
            let mut safe = true;
            let mut cur = king;
            loop {
                if self.is_attacked(cur, !us) {
                    safe = false;
                    break;
                }
                if cur == target {
                    break;
                }
                cur = cur.offset(step, 0).expect("on back rank");
            }
            if safe {
                out.push(Move {
                    from: king,
                    to: target,
                    promotion: None,
                    kind: MoveKind::Castle,
                });
            }
        }
    }

    /// Applies a move known to be pseudo-legal in this position.
    pub(crate) fn play_unchecked(&self, m: &Move) -> Position {
        let mut next = self.clone();
        let us = self.turn;
        let moving = self.board[m.from.index()].expect("move from empty square");
        let captured = self.board[m.to.index()];

        next.board[m.from.index()] = None;
        let placed = match m.promotion {
            Some(role) => Piece::new(us, role),
            None => moving,
        };
        next.board[m.to.index()] = Some(placed);

        match m.kind {
            MoveKind::EnPassant => {
                let victim = m.to.offset(0, -us.pawn_direction()).expect("on board");
                next.board[victim.index()] = None;
            }
            MoveKind::Castle => {
                let side = m.castling_side().expect("castle has a side");
                let rook_from = side.rook_home(us);
                let rook_to = side.rook_target(us);
                next.board[rook_from.index()] = None;
                next.board[rook_to.index()] = Some(Piece::new(us, Role::Rook));
            }
            _ => {}
        }

        if moving.role == Role::King {
            next.kings[us.index()] = m.to;
            next.castling.clear_color(us);
        }
        for color in Color::ALL {
            for side in [CastlingSide::King, CastlingSide::Queen] {
                let home = side.rook_home(color);
                if m.from == home || m.to == home {
                    next.castling.set(color, side, false);
                }
            }
        }

        next.ep_square = if m.kind == MoveKind::DoublePush {
            m.from.offset(0, us.pawn_direction())
        } else {
            None
        };

        if moving.role == Role::Pawn || captured.is_some() || m.kind == MoveKind::EnPassant {
            next.halfmove_clock = 0;
        } else {
            next.halfmove_clock = self.halfmove_clock + 1;
        }
        if us == Color::Black {
            next.fullmove_number = self.fullmove_number + 1;
        }
        next.turn = !us;
        next
    }

    /// Plays `m`, returning the successor. Fails unless `m` is legal here.
    pub fn apply_move(&self, m: &Move) -> Result<Position, IllegalMove> {
        if self.legal_moves().contains(m) {
            Ok(self.play_unchecked(m))
        } else {
            Err(IllegalMove {
                mv: m.uci(),
                fen: crate::notation::render_fen(self),
            })
        }
    }

    /// Finds the legal move with the given UCI text.
    pub fn find_uci(&self, uci: &str) -> Option<Move> {
        self.legal_moves().into_iter().find(|m| m.uci() == uci)
    }
}

/// Leaf count of the legal move tree at exactly `depth` plies.
pub fn perft(pos: &Position, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = pos.legal_moves();
    if depth == 1 {
        return moves.len() as u64;
    }
    moves
        .iter()
        .map(|m| perft(&pos.play_unchecked(m), depth - 1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::parse_fen;

    fn sq(s: &str) -> Square {
        Square::parse(s).unwrap()
    }

    #[test]
    fn startpos_has_twenty_moves() {
        // 16 pawn moves (8 single + 8 double) + 4 knight moves.
        let moves = Position::startpos().legal_moves();
        assert_eq!(moves.len(), 20);
        let knights = moves
            .iter()
            .filter(|m| {
                Position::startpos().piece_at(m.from).map(|p| p.role) == Some(Role::Knight)
            })
            .count();
        assert_eq!(knights, 4);
    }

    #[test]
    fn double_push_sets_ep_square() {
        let start = Position::startpos();
        let e4 = start.find_uci("e2e4").unwrap();
        let next = start.apply_move(&e4).unwrap();
        assert_eq!(next.turn(), Color::Black);
        assert_eq!(next.ep_square(), Some(sq("e3")));
        // Input untouched.
        assert_eq!(start, Position::startpos());
    }

    #[test]
    fn castling_moves_king_and_rook() {
        let pos = parse_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1").unwrap();
        let castle = pos.find_uci("e1g1").unwrap();
        assert!(castle.is_castle());
        let next = pos.apply_move(&castle).unwrap();
        assert_eq!(next.piece_at(sq("g1")), Some(Piece::new(Color::White, Role::King)));
        assert_eq!(next.piece_at(sq("f1")), Some(Piece::new(Color::White, Role::Rook)));
        assert_eq!(next.piece_at(sq("h1")), None);
        assert!(!next.castling().has(Color::White, CastlingSide::King));
        assert!(!next.castling().has(Color::White, CastlingSide::Queen));
        assert!(next.castling().has(Color::Black, CastlingSide::Queen));
    }

    #[test]
    fn castling_through_check_is_illegal() {
        // Black rook on f8 covers f1.
        let pos = parse_fen("5rk1/8/8/8/8/8/8/R3K2R w KQ - 0 1").unwrap();
        assert!(pos.find_uci("e1g1").is_none());
        assert!(pos.find_uci("e1c1").is_some());
    }

    #[test]
    fn en_passant_removes_bypassed_pawn() {
        let pos = parse_fen("4k3/8/8/3Pp3/8/8/8/4K3 w - e6 0 1").unwrap();
        let ep = pos.find_uci("d5e6").unwrap();
        assert!(ep.is_en_passant());
        let next = pos.apply_move(&ep).unwrap();
        assert_eq!(next.piece_at(sq("e5")), None);
        assert_eq!(next.piece_at(sq("e6")), Some(Piece::new(Color::White, Role::Pawn)));
    }

    #[test]
    fn checkmate_has_no_moves() {
        // Fool's mate.
        let pos =
            parse_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3").unwrap();
        assert!(pos.legal_moves().is_empty());
        assert!(pos.is_checkmate());
    }

    #[test]
    fn stalemate_has_no_moves() {
        let pos = parse_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1").unwrap();
        assert!(pos.is_stalemate());
    }

    #[test]
    fn illegal_move_is_rejected() {
        let pos = Position::startpos();
        let bogus = Move {
            from: sq("e2"),
            to: sq("e5"),
            promotion: None,
            kind: MoveKind::Quiet,
        };
        assert!(pos.apply_move(&bogus).is_err());
    }

    #[test]
    fn promotions_generate_four_choices() {
        let pos = parse_fen("4k3/P7/8/8/8/8/8/4K3 w - - 0 1").unwrap();
        let promos: Vec<_> = pos
            .legal_moves()
            .into_iter()
            .filter(|m| m.promotion.is_some())
            .collect();
        assert_eq!(promos.len(), 4);
    }

    #[test]
    fn clocks_update() {
        let start = Position::startpos();
        let nf3 = start.find_uci("g1f3").unwrap();
        let p1 = start.apply_move(&nf3).unwrap();
        assert_eq!((p1.halfmove_clock(), p1.fullmove_number()), (1, 1));
        let e5 = p1.find_uci("e7e5").unwrap();
        let p2 = p1.apply_move(&e5).unwrap();
        assert_eq!((p2.halfmove_clock(), p2.fullmove_number()), (0, 2));
    }

    #[test]
    fn perft_shallow() {
        let start = Position::startpos();
        assert_eq!(perft(&start, 0), 1);
        assert_eq!(perft(&start, 1), 20);
        assert_eq!(perft(&start, 2), 400);
    }
}
