use std::collections::BTreeMap;

use gambit_core::analysis::{analyze_gambit, AnalysisOptions};
use gambit_core::catalog::{self, fixture_corpus, mock_script, CATALOG};
use gambit_core::corpus::query_transitions;
use gambit_core::engine::{EngineLaunch, EvalCache, Evaluator, SearchLimits, SessionOptions};
use gambit_core::eval::GambiteerEval;
use gambit_core::metrics::{rank_gambits, ProbabilityMode, RankKey, Verdict};
use gambit_core::notation::{parse_mainline, parse_san, render_fen, render_movetext};
use tempfile::TempDir;

// Final positions and canonical SAN computed with python-chess.
const GOLDEN: &[(&str, usize, &str, &str)] = &[
    ("stafford-1", 10, "r1bqk2r/ppp2ppp/2p2n2/2b5/4P3/3P4/PPP2PPP/RNBQKB1R w KQkq - 1 6", "e4 e5 Nf3 Nf6 Nxe5 Nc6 Nxc6 dxc6 d3 Bc5"),
    ("stafford-2", 10, "r1bqk2r/ppp2ppp/2p2n2/2b5/4P3/2N5/PPPP1PPP/R1BQKB1R w KQkq - 2 6", "e4 e5 Nf3 Nf6 Nxe5 Nc6 Nxc6 dxc6 Nc3 Bc5"),
    ("reverse-stafford", 9, "rnbqkb1r/pppp1ppp/8/4p3/2B5/2P2N2/PPP2PPP/R1BQK2R b KQkq - 0 5", "e4 e5 Bc4 Nf6 Nf3 Nxe4 Nc3 Nxc3 dxc3"),
    ("smith-morra-1", 5, "rnbqkbnr/pp1ppppp/8/8/3pP3/2P5/PP3PPP/RNBQKBNR b KQkq - 0 3", "e4 c5 d4 cxd4 c3"),
    ("smith-morra-2", 21, "rq2k2r/pp1bbppp/2nppn2/1N6/2B1PB2/5N2/PP2QPPP/R2R2K1 b kq - 9 11", "e4 c5 d4 cxd4 c3 dxc3 Nxc3 Nc6 Nf3 d6 Bc4 e6 O-O Nf6 Qe2 Be7 Rd1 Bd7 Nb5 Qb8 Bf4"),
    ("halloween-1", 23, "r1bqk2r/ppppnp1p/6n1/4P1B1/1b1P4/2N3Q1/PPP2PP1/R3KB1R b KQkq - 3 12", "e4 e5 Nf3 Nc6 Nc3 Nf6 Nxe5 Nxe5 d4 Ng6 e5 Ng8 h4 Bb4 h5 N6e7 Qg4 g6 hxg6 Nxg6 Qg3 N8e7 Bg5"),
    ("halloween-2", 21, "r1bqk1nr/ppp3pp/3b1pn1/8/2BPN3/5Q2/PPP2PPP/R1B2RK1 b kq - 1 11", "e4 e5 Nf3 Nc6 Nc3 Nf6 Nxe5 Nxe5 d4 Ng6 e5 Ng8 Bc4 Bb4 Qf3 f6 O-O d5 exd6 Bxd6 Ne4"),
    ("danish-1", 7, "rnbqkbnr/pppp1ppp/8/8/4P3/2N5/PP3PPP/R1BQKBNR b KQkq - 0 4", "e4 e5 d4 exd4 c3 dxc3 Nxc3"),
    ("danish-2", 13, "r1bqkb1r/ppp2ppp/2np1n2/8/2B1P3/1QN2N2/PP3PPP/R1B1K2R b KQkq - 1 7", "e4 e5 d4 exd4 c3 dxc3 Nxc3 Nc6 Bc4 Nf6 Nf3 d6 Qb3"),
    ("goring", 7, "r1bqkbnr/pppp1ppp/2n5/8/3pP3/2P2N2/PP3PPP/RNBQKB1R b KQkq - 0 4", "e4 e5 Nf3 Nc6 d4 exd4 c3"),
    ("kings", 3, "rnbqkbnr/pppp1ppp/8/4p3/4PP2/8/PPPP2PP/RNBQKBNR b KQkq f3 0 2", "e4 e5 f4"),
    ("budapest", 4, "rnbqkb1r/pppp1ppp/5n2/4p3/2PP4/8/PP2PPPP/RNBQKBNR w KQkq e6 0 3", "d4 Nf6 c4 e5"),
    ("blackmar-diemer", 3, "rnbqkbnr/ppp1pppp/8/3p4/3PP3/8/PPP2PPP/RNBQKBNR b KQkq e3 0 2", "d4 d5 e4"),
    ("evans", 7, "r1bqk1nr/pppp1ppp/2n5/2b1p3/1PB1P3/5N2/P1PP1PPP/RNBQK2R b KQkq b3 0 4", "e4 e5 Nf3 Nc6 Bc4 Bc5 b4"),
    ("queens", 3, "rnbqkbnr/ppp1pppp/8/3p4/2PP4/8/PP2PPPP/RNBQKBNR b KQkq c3 0 2", "d4 d5 c4"),
];

#[test]
fn mainlines_reach_golden_positions() {
    assert_eq!(GOLDEN.len(), CATALOG.len());
    for &(name, plies, fen, sans) in GOLDEN {
        let e = catalog::entry(name).unwrap();
        let line = e.spec().mainline().unwrap();
        assert_eq!(line.len(), plies, "{name}");
        assert_eq!(render_fen(&line.final_position), fen, "{name}");
        assert_eq!(line.sans().join(" "), sans, "{name}");
        let moves: Vec<_> = line.moves().copied().collect();
        let again = parse_mainline(&render_movetext(&line.start, &moves)).unwrap();
        assert_eq!(again, line, "{name}");
    }
}

#[test]
fn tabled_replies_are_legal_and_values_match_win_probabilities() {
    let mut off = Vec::new();
    for (e, t) in catalog::tabled() {
        let branch = e.spec().mainline().unwrap().final_position;
        for r in &t.rows {
            parse_san(&branch, r.san).unwrap();
            let gap = (r.q.win_prob().value() - r.win_prob).abs();
            if gap > 0.01 {
                off.push((e.name, r.san, (gap * 1e4).round() / 1e4));
            }
        }
    }
    // +1.43 converts to 69.5%; the table prints 71%, the entry for +1.55.
    assert_eq!(off, [("stafford-2", "Bc4", 0.0151)]);
}

#[test]
fn fixture_corpus_follows_tabled_frequencies() {
    let index = fixture_corpus().unwrap();
    for (e, t) in catalog::tabled() {
        let branch = e.spec().mainline().unwrap().final_position;
        let d = query_transitions(&index, &branch, 25).unwrap();
        assert_eq!(d.total, t.fixture_games, "{}", e.name);
        let top: Vec<_> = d.entries.iter().take(5).map(|x| x.mv).collect();
        for r in &t.rows {
            let m = parse_san(&branch, r.san).unwrap();
            assert!(top.contains(&m), "{} {}", e.name, r.san);
            assert!((d.probability(&m) - r.probability).abs() < 1e-12, "{} {}", e.name, r.san);
        }
    }
}

fn catalog_reports(dir: &TempDir, mode: ProbabilityMode) -> Vec<gambit_core::metrics::GambitReport> {
    let script = dir.path().join("script.txt");
    std::fs::write(&script, mock_script().unwrap().render()).unwrap();
    let launch = EngineLaunch::new(env!("CARGO_BIN_EXE_mock-uci")).arg("--script").arg(&script);
    let mut ev = Evaluator::new(Some((launch, SessionOptions::default())), EvalCache::new(), None);
    let index = fixture_corpus().unwrap();
    let opts = AnalysisOptions {
        limits: SearchLimits::depth(20),
        mode,
        min_games: 25,
    };
    CATALOG
        .iter()
        .map(|e| {
            let corpus = e.table.is_some().then_some(&index);
            analyze_gambit(&e.spec(), &mut ev, corpus, &opts).unwrap()
        })
        .collect()
}

#[test]
fn scripted_catalog_reproduces_reference_values() {
    let dir = TempDir::new().unwrap();
    let reports = catalog_reports(&dir, ProbabilityMode::Renormalized);
    for (e, r) in CATALOG.iter().zip(&reports) {
        assert_eq!(r.initial_q, GambiteerEval::Pawns(e.initial_q), "{}", e.name);
        let Some(t) = &e.table else {
            assert!(r.rows.is_empty());
            continue;
        };
        assert_eq!(r.current_q, GambiteerEval::Pawns(t.current_q), "{}", e.name);
        assert_eq!(r.pre_gambit_q, GambiteerEval::Pawns(t.pre_gambit_q), "{}", e.name);
        let got: BTreeMap<&str, (GambiteerEval, f64)> =
            r.rows.iter().map(|x| (x.label.as_str(), (x.q, x.probability))).collect();
        let want: BTreeMap<&str, (GambiteerEval, f64)> =
            t.rows.iter().map(|x| (x.san, (x.q, x.probability))).collect();
        assert_eq!(got, want, "{}", e.name);
        assert_eq!(r.classification.unwrap().verdict, Verdict::Gambit, "{}", e.name);
    }
    let by_name = |n: &str| reports.iter().find(|r| r.spec.name == n).unwrap();
    assert!((by_name("stafford-1").test_statistic.unwrap() - 1.99).abs() < 1e-12);
    assert!((by_name("smith-morra-1").test_statistic.unwrap() - 0.66).abs() < 1e-12);
    assert_eq!(by_name("queens").classification.unwrap().verdict, Verdict::NonGambit);

    let order: Vec<&str> = rank_gambits(&reports, RankKey::InitialQ)
        .iter()
        .map(|r| r.spec.name.as_str())
        .collect();
    assert_eq!(
        order,
        [
            "stafford-1", "stafford-2", "halloween-1", "halloween-2", "reverse-stafford", "kings",
            "budapest", "blackmar-diemer", "danish-1", "danish-2", "goring", "smith-morra-1",
            "smith-morra-2", "evans", "queens"
        ]
    );
    let skew: Vec<&str> = rank_gambits(&reports, RankKey::OutcomeSkew)
        .iter()
        .take(9)
        .map(|r| r.spec.name.as_str())
        .collect();
    assert_eq!(
        skew,
        [
            "smith-morra-1", "halloween-2", "danish-1", "stafford-1", "smith-morra-2",
            "halloween-1", "reverse-stafford", "stafford-2", "danish-2"
        ]
    );
}
