//! Built-in gambit lines with reference evaluations, plus the scripted
//! engine and fixture corpus that reproduce them without a real engine.

use std::collections::BTreeMap;

use crate::chess::{Color, Move, Position};
use crate::corpus::{build_index, CorpusError, CorpusIndex};
use crate::engine::{MockScript, MockScriptError};
use crate::eval::{from_gambiteer_perspective, GambiteerEval};
use crate::metrics::GambitSpec;
use crate::notation::{parse_san, render_pgn, GameRecord, GameResult};

/// One reply with its reference value, frequency and win probability.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ReferenceRow {
    pub san: &'static str,
    pub q: GambiteerEval,
    pub probability: f64,
    /// Tabulated win probability (rounded to whole percent).
    pub win_prob: f64,
}

/// Reference statistics for an analysed branch position.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ReferenceTable {
    pub rows: [ReferenceRow; 5],
    pub current_q: f64,
    pub pre_gambit_q: f64,
    /// Skew and volatility as printed beside the table.
    pub skew: f64,
    pub volatility: f64,
    /// Skew and volatility as printed in the cross-gambit ranking.
    pub ranking_skew: f64,
    pub ranking_volatility: f64,
    /// Games in the fixture corpus reaching the branch position.
    pub fixture_games: u64,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub title: &'static str,
    pub movetext: &'static str,
    pub gambit_ply: usize,
    pub gambiteer: Color,
    /// Reference value right after the gambit move.
    pub initial_q: f64,
    pub table: Option<ReferenceTable>,
}

impl CatalogEntry {
    pub fn spec(&self) -> GambitSpec {
        GambitSpec {
            name: self.name.to_string(),
            movetext: self.movetext.to_string(),
            gambit_ply: self.gambit_ply,
            gambiteer: self.gambiteer,
            k: 5,
        }
    }
}

const fn row(san: &'static str, q: f64, pct: f64, win_pct: f64) -> ReferenceRow {
    ReferenceRow {
        san,
        q: GambiteerEval::Pawns(q),
        probability: pct / 100.0,
        win_prob: win_pct / 100.0,
    }
}

macro_rules! stafford {
    ($tail:literal $(,)?) => {
        concat!("1. e4 e5 2. Nf3 Nf6 3. Nxe5 Nc6 4. Nxc6 dxc6", $tail)
    };
}

macro_rules! halloween {
    ($tail:literal $(,)?) => {
        concat!("1. e4 e5 2. Nf3 Nc6 3. Nc3 Nf6 4. Nxe5 Nxe5 5. d4 Ng6 6. e5 Ng8", $tail)
    };
}

macro_rules! smith_morra {
    ($tail:literal $(,)?) => {
        concat!("1. e4 c5 2. d4 cxd4 3. c3", $tail)
    };
}

macro_rules! danish {
    ($tail:literal $(,)?) => {
        concat!("1. e4 e5 2. d4 exd4 3. c3 dxc3 4. Nxc3", $tail)
    };
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "stafford-1",
        title: "Stafford Gambit, 5.d3",
        movetext: stafford!(" 5. d3 Bc5"),
        gambit_ply: 6,
        gambiteer: Color::Black,
        initial_q: -2.56,
        table: Some(ReferenceTable {
            rows: [
                row("Be2", -2.56, 59.0, 19.0),
                row("Nc3", 1.48, 4.0, 70.0),
                row("Bg5", 6.20, 4.0, 97.0),
                row("f3", -1.74, 4.0, 27.0),
                row("Be3", -0.87, 14.0, 38.0),
            ],
            current_q: -2.56,
            pre_gambit_q: -0.57,
            skew: 0.92,
            volatility: 0.038,
            ranking_skew: 0.92,
            ranking_volatility: 0.038,
            fixture_games: 100,
        }),
    },
    CatalogEntry {
        name: "stafford-2",
        title: "Stafford Gambit, 5.Nc3",
        movetext: stafford!(" 5. Nc3 Bc5"),
        gambit_ply: 6,
        gambiteer: Color::Black,
        initial_q: -2.56,
        table: Some(ReferenceTable {
            rows: [
                row("h3", -2.56, 20.0, 19.0),
                row("Bc4", 1.43, 6.0, 71.0),
                row("d3", 1.55, 7.0, 71.0),
                row("Be2", -0.14, 60.0, 48.0),
                row("Qe2", -1.62, 7.0, 28.0),
            ],
            current_q: -2.52,
            pre_gambit_q: -0.57,
            skew: 1.45,
            volatility: 0.11,
            ranking_skew: 1.45,
            ranking_volatility: 0.112,
            fixture_games: 100,
        }),
    },
    CatalogEntry {
        name: "reverse-stafford",
        title: "Boden-Kieseritzky-Morphy Gambit",
        movetext: "1. e4 e5 2. Bc4 Nf6 3. Nf3 Nxe4 4. Nc3 Nxc3 5. dxc3",
        gambit_ply: 5,
        gambiteer: Color::White,
        initial_q: -0.87,
        table: Some(ReferenceTable {
            rows: [
                row("f6", -0.74, 60.0, 40.0),
                row("c6", 0.00, 14.0, 50.0),
                row("d6", 3.63, 4.0, 89.0),
                row("Bc5", 2.36, 4.0, 79.0),
                row("Nc6", 3.34, 4.0, 87.0),
            ],
            current_q: -0.87,
            pre_gambit_q: 0.62,
            skew: 1.39,
            volatility: 0.089,
            ranking_skew: 1.39,
            ranking_volatility: 0.089,
            fixture_games: 100,
        }),
    },
    CatalogEntry {
        name: "smith-morra-1",
        title: "Smith-Morra Gambit, 3.c3",
        movetext: smith_morra!(""),
        gambit_ply: 5,
        gambiteer: Color::White,
        initial_q: -0.32,
        table: Some(ReferenceTable {
            rows: [
                row("dxc3", -0.17, 32.0, 48.0),
                row("d3", 0.93, 11.0, 63.0),
                row("g6", 0.90, 24.0, 63.0),
                row("Nf6", 0.00, 18.0, 50.0),
                row("d5", 0.36, 4.0, 55.0),
            ],
            current_q: -0.32,
            pre_gambit_q: 0.34,
            skew: -0.20,
            volatility: 0.06,
            ranking_skew: -0.20,
            ranking_volatility: 0.056,
            fixture_games: 400,
        }),
    },
    CatalogEntry {
        name: "smith-morra-2",
        title: "Smith-Morra Gambit, 11.Bf4",
        movetext: smith_morra!(
            " dxc3 4. Nxc3 Nc6 5. Nf3 d6 6. Bc4 e6 7. O-O Nf6 8. Qe2 Be7 9. Rd1 Bd7 10. Nb5 Qb8 11. Bf4",
        ),
        gambit_ply: 5,
        gambiteer: Color::White,
        initial_q: -0.32,
        table: Some(ReferenceTable {
            rows: [
                row("Ne5", 0.00, 12.0, 50.0),
                row("e5", 1.00, 50.0, 64.0),
                row("O-O", 1.70, 12.0, 73.0),
                row("Kf8", 4.64, 12.0, 94.0),
                row("Qd8", 5.37, 12.0, 96.0),
            ],
            current_q: 0.00,
            pre_gambit_q: 0.34,
            skew: 1.32,
            volatility: 0.103,
            ranking_skew: 1.32,
            ranking_volatility: 0.104,
            fixture_games: 100,
        }),
    },
    CatalogEntry {
        name: "halloween-1",
        title: "Halloween Gambit, 7.h4",
        movetext: halloween!(
            " 7. h4 Bb4 8. h5 N6e7 9. Qg4 g6 10. hxg6 Nxg6 11. Qg3 N8e7 12. Bg5",
        ),
        gambit_ply: 7,
        gambiteer: Color::White,
        initial_q: -1.93,
        table: Some(ReferenceTable {
            rows: [
                ReferenceRow {
                    san: "O-O",
                    q: GambiteerEval::MateFor(5),
                    probability: 0.20,
                    win_prob: 1.0,
                },
                row("d6", -0.41, 14.0, 44.0),
                row("d5", -1.45, 16.0, 30.0),
                row("Nf5", -2.43, 38.0, 20.0),
                row("Bxc3+", -0.81, 12.0, 39.0),
            ],
            current_q: -0.86,
            pre_gambit_q: 0.17,
            skew: 1.38,
            volatility: 0.06,
            ranking_skew: 1.37,
            ranking_volatility: 0.065,
            fixture_games: 100,
        }),
    },
    CatalogEntry {
        name: "halloween-2",
        title: "Halloween Gambit, 7.Bc4",
        movetext: halloween!(" 7. Bc4 Bb4 8. Qf3 f6 9. O-O d5 10. exd6 Bxd6 11. Ne4"),
        gambit_ply: 7,
        gambiteer: Color::White,
        initial_q: -1.93,
        table: Some(ReferenceTable {
            rows: [
                row("N8e7", 1.55, 25.0, 71.0),
                row("Bd7", 1.12, 6.0, 66.0),
                row("Be7", -1.17, 25.0, 34.0),
                row("Qe7", 1.10, 35.0, 65.0),
                row("Kf8", -0.70, 6.0, 40.0),
            ],
            current_q: -0.90,
            pre_gambit_q: 0.17,
            skew: 0.35,
            volatility: 0.09,
            ranking_skew: 0.34,
            ranking_volatility: 0.089,
            fixture_games: 100,
        }),
    },
    CatalogEntry {
        name: "danish-1",
        title: "Danish Gambit, 4.Nxc3",
        movetext: danish!(""),
        gambit_ply: 5,
        gambiteer: Color::White,
        initial_q: -0.35,
        table: Some(ReferenceTable {
            rows: [
                row("Nc6", -0.17, 53.0, 48.0),
                row("Nf6", 1.35, 3.0, 69.0),
                row("d6", 0.00, 20.0, 50.0),
                row("Bc5", -0.40, 3.0, 44.0),
                row("Bb4", -0.20, 20.0, 47.0),
            ],
            current_q: -0.35,
            pre_gambit_q: 0.40,
            skew: 0.89,
            volatility: 0.10,
            ranking_skew: 0.89,
            ranking_volatility: 0.096,
            fixture_games: 400,
        }),
    },
    CatalogEntry {
        name: "danish-2",
        title: "Danish Gambit, 7.Qb3",
        movetext: danish!(" Nc6 5. Bc4 Nf6 6. Nf3 d6 7. Qb3"),
        gambit_ply: 5,
        gambiteer: Color::White,
        initial_q: -0.35,
        table: Some(ReferenceTable {
            rows: [
                row("Qd7", -0.22, 92.0, 47.0),
                row("Be6", 1.97, 1.0, 76.0),
                row("Be7", 2.54, 1.0, 81.0),
                row("Qe7", 1.00, 4.0, 64.0),
                row("d5", 3.36, 1.0, 87.0),
            ],
            current_q: 0.00,
            pre_gambit_q: 0.40,
            skew: 1.49,
            volatility: 0.19,
            ranking_skew: 1.49,
            ranking_volatility: 0.096,
            fixture_games: 200,
        }),
    },
    CatalogEntry {
        name: "goring",
        title: "Goring Gambit",
        movetext: "1. e4 e5 2. Nf3 Nc6 3. d4 exd4 4. c3",
        gambit_ply: 7,
        gambiteer: Color::White,
        initial_q: -0.35,
        table: None,
    },
    CatalogEntry {
        name: "kings",
        title: "King's Gambit",
        movetext: "1. e4 e5 2. f4",
        gambit_ply: 3,
        gambiteer: Color::White,
        initial_q: -0.76,
        table: None,
    },
    CatalogEntry {
        name: "budapest",
        title: "Budapest Gambit",
        movetext: "1. d4 Nf6 2. c4 e5",
        gambit_ply: 4,
        gambiteer: Color::Black,
        initial_q: -0.75,
        table: None,
    },
    CatalogEntry {
        name: "blackmar-diemer",
        title: "Blackmar-Diemer Gambit",
        movetext: "1. d4 d5 2. e4",
        gambit_ply: 3,
        gambiteer: Color::White,
        initial_q: -0.56,
        table: None,
    },
    CatalogEntry {
        name: "evans",
        title: "Evans Gambit",
        movetext: "1. e4 e5 2. Nf3 Nc6 3. Bc4 Bc5 4. b4",
        gambit_ply: 7,
        gambiteer: Color::White,
        initial_q: -0.25,
        table: None,
    },
    CatalogEntry {
        name: "queens",
        title: "Queen's Gambit",
        movetext: "1. d4 d5 2. c4",
        gambit_ply: 3,
        gambiteer: Color::White,
        initial_q: 0.39,
        table: None,
    },
];

/// Cross-gambit averages printed beside the reference tables.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ReferenceSummary {
    pub current_q: f64,
    pub pre_gambit_q: f64,
    pub continuation_q: f64,
    pub skew: f64,
    pub volatility: f64,
    pub player_probability: f64,
    pub win_prob: f64,
    pub weighted_win_prob: f64,
}

pub const REFERENCE_SUMMARY: ReferenceSummary = ReferenceSummary {
    current_q: -0.93,
    pre_gambit_q: 0.14,
    continuation_q: 0.73,
    skew: 0.99,
    volatility: 0.09,
    player_probability: 0.189,
    win_prob: 0.581,
    weighted_win_prob: 0.0938,
};

pub fn entry(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

/// Entries that carry a reference table, in catalog order.
pub fn tabled() -> impl Iterator<Item = (&'static CatalogEntry, &'static ReferenceTable)> {
    CATALOG.iter().filter_map(|e| e.table.as_ref().map(|t| (e, t)))
}

fn script_insert(
    script: &mut MockScript,
    pos: &Position,
    q: GambiteerEval,
    gambiteer: Color,
) -> Result<(), MockScriptError> {
    script.insert(pos, from_gambiteer_perspective(q, gambiteer, pos.turn()))
}

/// Engine script reproducing every reference value: the position after each
/// gambit move, the position before it where known, each branch position
/// and every tabled reply.
pub fn mock_script() -> Result<MockScript, MockScriptError> {
    let mut script = MockScript::new();
    for e in CATALOG {
        let line = e.spec().mainline().expect("catalog mainlines are legal");
        let at = |ply| line.position_at(ply).expect("ply within mainline");
        script_insert(&mut script, at(e.gambit_ply), GambiteerEval::Pawns(e.initial_q), e.gambiteer)?;
        let Some(t) = &e.table else { continue };
        script_insert(
            &mut script,
            at(e.gambit_ply - 1),
            GambiteerEval::Pawns(t.pre_gambit_q),
            e.gambiteer,
        )?;
        let branch = &line.final_position;
        script_insert(&mut script, branch, GambiteerEval::Pawns(t.current_q), e.gambiteer)?;
        for r in &t.rows {
            let m = parse_san(branch, r.san).expect("catalog replies are legal");
            script_insert(&mut script, &branch.play_unchecked(&m), r.q, e.gambiteer)?;
        }
    }
    Ok(script)
}

fn fixture_game(moves: Vec<Move>) -> GameRecord {
    GameRecord {
        headers: vec![
            ("Event".to_string(), "fixture".to_string()),
            ("Result".to_string(), "*".to_string()),
        ],
        start: Position::startpos(),
        moves,
        result: GameResult::Unknown,
    }
}

/// A PGN corpus in which each branch position is reached by exactly
/// `fixture_games` games whose replies follow the tabled frequencies. The
/// remaining games play other moves, each less often than any tabled reply.
pub fn fixture_corpus_pgn() -> String {
    // Longer lines first so that lines passing through another branch are
    // counted before that branch is topped up.
    let mut entries: Vec<_> = tabled().collect();
    entries.sort_by_key(|(e, _)| std::cmp::Reverse(e.spec().mainline().map_or(0, |l| l.len())));
    let mut games: Vec<Vec<Move>> = Vec::new();
    for (e, t) in entries {
        let line = e.spec().mainline().expect("catalog mainlines are legal");
        let branch = &line.final_position;
        let prefix: Vec<Move> = line.moves().copied().collect();
        let key = branch.key();
        // Replies already contributed by longer lines through this branch.
        let mut have: BTreeMap<String, u64> = BTreeMap::new();
        for g in &games {
            let mut pos = Position::startpos();
            for m in g {
                if pos.key() == key {
                    *have.entry(m.uci()).or_default() += 1;
                    break;
                }
                pos = pos.play_unchecked(m);
            }
        }
        let mut want: Vec<(Move, u64)> = t
            .rows
            .iter()
            .map(|r| {
                let m = parse_san(branch, r.san).expect("catalog replies are legal");
                (m, (r.probability * t.fixture_games as f64).round() as u64)
            })
            .collect();
        let tabled_total: u64 = want.iter().map(|w| w.1).sum();
        let cap = want.iter().map(|w| w.1).min().unwrap_or(1).saturating_sub(1).max(1);
        let mut residual = t.fixture_games - tabled_total;
        for m in branch.legal_moves() {
            if residual == 0 {
                break;
            }
            if want.iter().any(|w| w.0 == m) {
                continue;
            }
            let n = residual.min(cap);
            want.push((m, n));
            residual -= n;
        }
        for (m, n) in want {
            let already = have.get(&m.uci()).copied().unwrap_or(0);
            assert!(already <= n, "{}: {} passes exceed {}", e.name, already, n);
            for _ in already..n {
                let mut g = prefix.clone();
                g.push(m);
                games.push(g);
            }
        }
    }
    games
        .into_iter()
        .map(|g| render_pgn(&fixture_game(g)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Index of [`fixture_corpus_pgn`].
pub fn fixture_corpus() -> Result<CorpusIndex, CorpusError> {
    let mut index = build_index(fixture_corpus_pgn().as_bytes(), 40)?;
    index.id = "fixture".to_string();
    Ok(index)
}
