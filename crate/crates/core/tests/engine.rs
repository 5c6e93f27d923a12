use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use gambit_core::chess::{Color, Position};
use gambit_core::engine::{
    EngineError, EngineLaunch, EngineScore, EngineSession, EvalCache, Evaluator, MockScript,
    SearchLimits, SessionOptions, MOCK_IDENTITY,
};
use gambit_core::eval::to_gambiteer_perspective;
use gambit_core::notation::{parse_fen, parse_san, START_FEN};
use tempfile::TempDir;

const STAFFORD_1: &str = "r1bqk2r/ppp2ppp/2p2n2/2b5/4P3/3P4/PPP2PPP/RNBQKB1R w KQkq - 1 6";

fn mock() -> EngineLaunch {
    EngineLaunch::new(env!("CARGO_BIN_EXE_mock-uci"))
}

fn with_script(dir: &TempDir, script: &MockScript) -> EngineLaunch {
    let path = dir.path().join("script.txt");
    std::fs::write(&path, script.render()).unwrap();
    mock().arg("--script").arg(path)
}

fn quick() -> SessionOptions {
    SessionOptions {
        handshake_timeout: Duration::from_secs(5),
        search_timeout: Duration::from_millis(300),
        stop_grace: Duration::from_millis(300),
        ..SessionOptions::default()
    }
}

#[test]
fn handshake_reports_identity() {
    let session = EngineSession::open(&mock(), quick()).unwrap();
    assert_eq!(session.identity(), MOCK_IDENTITY);
}

#[test]
fn silent_engine_times_out() {
    let opts = SessionOptions {
        handshake_timeout: Duration::from_millis(200),
        ..quick()
    };
    let start = Instant::now();
    let err = EngineSession::open(&mock().arg("--silent-handshake"), opts).err().unwrap();
    assert!(matches!(err, EngineError::HandshakeTimeout(_)), "{err}");
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn missing_program_is_a_launch_error() {
    let err = EngineSession::open(&EngineLaunch::new("/nonexistent/engine"), quick()).err().unwrap();
    assert!(matches!(err, EngineError::Launch { .. }));
}

#[test]
fn scripted_scores_and_multipv() {
    let dir = TempDir::new().unwrap();
    let mut script = MockScript::new();
    script.insert(&Position::startpos(), EngineScore::Pawns(0.2)).unwrap();
    let mate_pos = parse_fen(STAFFORD_1).unwrap();
    script.insert(&mate_pos, EngineScore::Mate(5)).unwrap();
    let mut s = EngineSession::open(&with_script(&dir, &script), quick()).unwrap();

    let r = s.evaluate(&Position::startpos(), &SearchLimits::depth(12)).unwrap();
    assert_eq!(r.value(), EngineScore::Pawns(0.2));
    assert_eq!(r.lines.len(), 5);
    assert_eq!(r.depth, 12);
    assert_eq!(r.identity, MOCK_IDENTITY);
    let ranks: Vec<u32> = r.lines.iter().map(|l| l.rank).collect();
    assert_eq!(ranks, [1, 2, 3, 4, 5]);

    let r = s.evaluate(&mate_pos, &SearchLimits::depth(12)).unwrap();
    assert_eq!(r.value(), EngineScore::Mate(5));
}

#[test]
fn multipv_is_capped_by_legal_moves() {
    let mut s = EngineSession::open(&mock(), quick()).unwrap();
    // Black king in the corner with two legal moves.
    let pos = parse_fen("k7/8/1K6/8/8/8/8/7R b - - 0 1").unwrap();
    let n = pos.legal_moves().len();
    let r = s.evaluate(&pos, &SearchLimits::depth(4)).unwrap();
    assert_eq!(r.lines.len(), n.min(5));
}

#[test]
fn limits_checked_before_io() {
    let mut s = EngineSession::open(&mock(), quick()).unwrap();
    let none = SearchLimits {
        depth: None,
        movetime_ms: None,
        multipv: 5,
    };
    assert!(matches!(
        s.evaluate(&Position::startpos(), &none),
        Err(EngineError::InvalidLimits)
    ));
    assert!(s.is_alive());
    assert!(s.evaluate(&Position::startpos(), &SearchLimits::depth(3)).is_ok());
}

#[test]
fn continuation_scores_in_gambiteer_view() {
    let dir = TempDir::new().unwrap();
    let pos = parse_fen(STAFFORD_1).unwrap();
    let table = [("Be2", -2.56), ("Nc3", 1.48), ("Bg5", 6.20), ("f3", -1.74), ("Be3", -0.87)];
    let mut script = MockScript::new();
    let mut moves = Vec::new();
    for (san, q) in table {
        let m = parse_san(&pos, san).unwrap();
        // Child positions have the gambiteer (black) to move.
        let child = pos.apply_move(&m).unwrap();
        script.insert(&child, EngineScore::Pawns(q)).unwrap();
        moves.push(m);
    }
    let mut s = EngineSession::open(&with_script(&dir, &script), quick()).unwrap();
    let scores = s.evaluate_moves(&pos, &moves, &SearchLimits::default());
    assert_eq!(scores.len(), 5);
    for ((m, score), (san, q)) in scores.into_iter().zip(table) {
        assert_eq!(m, parse_san(&pos, san).unwrap());
        let mover = score.unwrap();
        assert_eq!(mover, EngineScore::Pawns(-q), "{san}");
        let g = to_gambiteer_perspective(mover, Color::Black, Color::White);
        assert_eq!(g.pawns(), Some(q));
    }

    let single = s.evaluate_moves(&pos, &moves[..1], &SearchLimits::default());
    assert_eq!(single.len(), 1);
}

#[test]
fn mate_scores_flip_with_the_child() {
    let dir = TempDir::new().unwrap();
    let pos = Position::startpos();
    let e4 = parse_san(&pos, "e4").unwrap();
    let mut script = MockScript::new();
    script.insert(&pos.apply_move(&e4).unwrap(), EngineScore::Mate(-3)).unwrap();
    let mut s = EngineSession::open(&with_script(&dir, &script), quick()).unwrap();
    let out = s.evaluate_moves(&pos, &[e4], &SearchLimits::depth(8));
    assert_eq!(*out[0].1.as_ref().unwrap(), EngineScore::Mate(3));
}

#[test]
fn illegal_moves_fail_individually() {
    let mut s = EngineSession::open(&mock(), quick()).unwrap();
    let pos = Position::startpos();
    let e4 = parse_san(&pos, "e4").unwrap();
    let after = pos.apply_move(&e4).unwrap();
    let e5 = parse_san(&after, "e5").unwrap();
    let out = s.evaluate_moves(&pos, &[e4, e5], &SearchLimits::depth(2));
    assert!(out[0].1.is_ok());
    assert!(matches!(out[1].1, Err(EngineError::IllegalMove(_))));
}

#[test]
fn stopped_search_keeps_session() {
    let mut s = EngineSession::open(&mock().arg("--hang"), quick()).unwrap();
    let err = s.evaluate(&Position::startpos(), &SearchLimits::depth(5)).unwrap_err();
    assert!(matches!(err, EngineError::SearchTimeout(_)));
    assert!(s.is_alive());
}

#[test]
fn unstoppable_search_kills_session() {
    let mut s = EngineSession::open(&mock().arg("--hang").arg("--ignore-stop"), quick()).unwrap();
    let err = s.evaluate(&Position::startpos(), &SearchLimits::depth(5)).unwrap_err();
    assert!(matches!(err, EngineError::SearchTimeout(_)));
    assert!(!s.is_alive());
    assert!(matches!(
        s.evaluate(&Position::startpos(), &SearchLimits::depth(5)),
        Err(EngineError::SessionDead)
    ));
}

#[test]
fn terminal_positions_are_not_searched() {
    let mut s = EngineSession::open(&mock(), quick()).unwrap();
    let mated = parse_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3").unwrap();
    assert!(matches!(
        s.evaluate(&mated, &SearchLimits::depth(3)),
        Err(EngineError::Terminal)
    ));
    assert!(s.is_alive());
}

#[test]
fn sessions_move_between_threads() {
    fn assert_send<T: Send>() {}
    assert_send::<EngineSession>();
    let mut s = EngineSession::open(&mock(), quick()).unwrap();
    let handle = std::thread::spawn(move || {
        s.evaluate(&Position::startpos(), &SearchLimits::depth(2)).map(|r| r.lines.len())
    });
    assert_eq!(handle.join().unwrap().unwrap(), 5);
}

fn transcript(script: &str) -> Vec<u8> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mock-uci"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    child.wait_with_output().unwrap().stdout
}

#[test]
fn mock_output_is_byte_identical() {
    let input = format!(
        "uci\nsetoption name MultiPV value 5\nisready\nposition fen {START_FEN} moves e2e4 e7e5\ngo depth 9\nposition fen {STAFFORD_1}\ngo movetime 10\nquit\n"
    );
    let a = transcript(&input);
    let b = transcript(&input);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("info depth 9 ")).count(), 5);
    assert_eq!(text.lines().filter(|l| l.starts_with("bestmove")).count(), 2);
}

#[test]
fn evaluator_serves_second_run_from_cache() {
    let dir = TempDir::new().unwrap();
    let cache_path = dir.path().join("evals.cache");
    let pos = Position::startpos();
    let moves: Vec<_> = ["e4", "d4", "c4"].iter().map(|s| parse_san(&pos, s).unwrap()).collect();
    let limits = SearchLimits::depth(10);

    let mut ev = Evaluator::new(Some((mock(), quick())), EvalCache::new(), None);
    let first = ev.move_values(&pos, &moves, &limits).unwrap();
    let v = ev.value(&pos, &limits).unwrap();
    assert_eq!(ev.searches, 4);
    ev.cache().save(&cache_path).unwrap();

    let cache = EvalCache::load(&cache_path).unwrap();
    assert_eq!(cache.len(), 4);
    let mut offline = Evaluator::new(None, cache, None);
    assert_eq!(offline.identity().unwrap(), MOCK_IDENTITY);
    assert_eq!(offline.move_values(&pos, &moves, &limits).unwrap(), first);
    assert_eq!(offline.value(&pos, &limits).unwrap(), v);
    assert_eq!(offline.searches, 0);
}

#[test]
fn evaluator_rejects_identity_mismatch() {
    let mut ev = Evaluator::new(Some((mock(), quick())), EvalCache::new(), Some("Stockfish 14".into()));
    let err = ev.value(&Position::startpos(), &SearchLimits::depth(3)).unwrap_err();
    assert!(matches!(err, EngineError::IdentityMismatch { .. }));
}
