use std::collections::HashMap;

use gambit_core::chess::{perft, Position};
use gambit_core::notation::{parse_fen, render_fen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Node counts produced by an independent move generator (python-chess).
const REFERENCE: &[(&str, &[u64])] = &[
    (
        "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",
        &[1, 20, 400, 8902, 197281],
    ),
    (
        "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1",
        &[1, 48, 2039, 97862],
    ),
    ("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1", &[1, 14, 191, 2812, 43238]),
    (
        "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1",
        &[1, 6, 264, 9467],
    ),
    (
        "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8",
        &[1, 44, 1486, 62379],
    ),
];

#[test]
fn perft_matches_reference() {
    for (fen, counts) in REFERENCE {
        let pos = parse_fen(fen).unwrap();
        for (depth, &expected) in counts.iter().enumerate() {
            assert_eq!(perft(&pos, depth as u32), expected, "{fen} depth {depth}");
        }
    }
}

fn random_positions() -> Vec<(Position, [u64; 3])> {
    include_str!("fixtures/random_perft.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let (fen, counts) = l.split_once(';').unwrap();
            let c: Vec<u64> = counts.split_whitespace().map(|n| n.parse().unwrap()).collect();
            (parse_fen(fen.trim()).unwrap(), [c[0], c[1], c[2]])
        })
        .collect()
}

#[test]
fn random_positions_match_reference_counts() {
    let positions = random_positions();
    assert_eq!(positions.len(), 100);
    for (pos, counts) in &positions {
        for (i, &expected) in counts.iter().enumerate() {
            assert_eq!(perft(pos, i as u32 + 1), expected, "{}", render_fen(pos));
        }
    }
}

#[test]
fn perft_recursion_identity() {
    for (pos, _) in random_positions() {
        let children: u64 = pos
            .legal_moves()
            .iter()
            .map(|m| perft(&pos.apply_move(m).unwrap(), 2))
            .sum();
        assert_eq!(perft(&pos, 3), children, "{}", render_fen(&pos));
    }
}

/// Plays a random game of up to `plies` moves, calling `visit` on each position.
fn playout(rng: &mut ChaCha8Rng, plies: usize, mut visit: impl FnMut(&Position)) {
    let mut pos = Position::startpos();
    visit(&pos);
    for _ in 0..plies {
        let moves = pos.legal_moves();
        let Some(m) = moves.choose(rng) else { break };
        pos = pos.apply_move(m).unwrap();
        visit(&pos);
    }
}

#[test]
fn random_playout_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let len = rng.gen_range(1..160);
        playout(&mut rng, len, |pos| {
            let fen = render_fen(pos);
            let back = parse_fen(&fen).unwrap();
            assert_eq!(&back, pos, "{fen}");
            assert_eq!(back.key(), pos.key());
            let mover = pos.turn();
            for m in pos.legal_moves() {
                let next = pos.apply_move(&m).unwrap();
                assert!(!next.is_attacked(next.king(mover), !mover), "{fen} {m}");
                assert_eq!(next.turn(), !mover);
            }
            assert_eq!(pos.is_checkmate(), pos.is_check() && pos.legal_moves().is_empty());
        });
    }
}

/// Board, side, castling and capturable en passant file: the state a
/// position key is meant to identify.
fn identity(pos: &Position) -> String {
    let fen = render_fen(pos);
    let fields: Vec<&str> = fen.split(' ').collect();
    let ep = if pos.ep_capture_possible() { fields[3] } else { "-" };
    format!("{} {} {} {ep}", fields[0], fields[1], fields[2])
}

#[test]
fn position_keys_do_not_collide() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen: HashMap<u64, String> = HashMap::new();
    let mut visited = 0usize;
    while visited < 1_000_000 {
        playout(&mut rng, 120, |pos| {
            visited += 1;
            let id = identity(pos);
            match seen.get(&pos.key().0) {
                Some(prev) => assert_eq!(prev, &id, "key collision"),
                None => {
                    seen.insert(pos.key().0, id);
                }
            }
        });
    }
    assert!(seen.len() > 500_000, "only {} distinct positions", seen.len());
}

#[test]
fn transposition_keys_agree() {
    let a = gambit_core::notation::parse_mainline("1. d4 d5 2. Nf3").unwrap();
    let b = gambit_core::notation::parse_mainline("1. Nf3 d5 2. d4").unwrap();
    assert_eq!(a.final_position.key(), b.final_position.key());
    // The en passant square only matters when a capture is possible.
    let c = gambit_core::notation::parse_mainline("1. e4 Nf6 2. Nf3").unwrap();
    let d = gambit_core::notation::parse_mainline("1. Nf3 Nf6 2. e4").unwrap();
    assert_ne!(render_fen(&c.final_position), render_fen(&d.final_position));
    assert_eq!(c.final_position.key(), d.final_position.key());
}
