//! Pawn advantage to win probability conversion and perspective handling.

use std::fmt;

use thiserror::Error;

use crate::chess::Color;
use crate::engine::EngineScore;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("win probability {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("win probability {0} has no finite pawn advantage")]
    Boundary(f64),
    #[error("pawn advantage must be finite, got {0}")]
    NotFinite(f64),
    #[error("perspective mismatch: {0:?} vs {1:?}")]
    PerspectiveMismatch(Perspective, Perspective),
}

/// Probability of winning, in `[0, 1]`.
#[derive(Copy, Clone, Debug, PartialEq, PartialOrd)]
pub struct WinProb(f64);

impl WinProb {
    pub const ZERO: WinProb = WinProb(0.0);
    pub const ONE: WinProb = WinProb(1.0);

    pub fn new(p: f64) -> Result<WinProb, EvalError> {
        if (0.0..=1.0).contains(&p) {
            Ok(WinProb(p))
        } else {
            Err(EvalError::OutOfRange(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for WinProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}%", self.0 * 100.0)
    }
}

/// Whose point of view a pawn advantage is expressed from.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Perspective {
    White,
    Black,
    Gambiteer,
    SideToMove,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PawnAdvantage {
    value: f64,
    perspective: Perspective,
}

impl PawnAdvantage {
    pub fn new(value: f64, perspective: Perspective) -> Result<PawnAdvantage, EvalError> {
        if value.is_finite() {
            Ok(PawnAdvantage { value, perspective })
        } else {
            Err(EvalError::NotFinite(value))
        }
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn perspective(self) -> Perspective {
        self.perspective
    }

    /// Difference `self - other`; both sides must share a perspective.
    pub fn minus(self, other: PawnAdvantage) -> Result<f64, EvalError> {
        if self.perspective != other.perspective {
            return Err(EvalError::PerspectiveMismatch(self.perspective, other.perspective));
        }
        Ok(self.value - other.value)
    }
}

/// `1 / (1 + 10^(-c/4))` with `c` in pawns.
pub fn win_probability(pawns: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-pawns / 4.0))
}

/// Inverse of [`win_probability`] on the open interval `(0, 1)`.
pub fn pawns_from_probability(w: f64) -> f64 {
    4.0 * (w / (1.0 - w)).log10()
}

pub fn cp_to_winprob(c: PawnAdvantage) -> WinProb {
    WinProb(win_probability(c.value))
}

/// Pawn advantage for a win probability. The result carries the side-to-move
/// perspective; `0` and `1` have no finite preimage and are rejected.
pub fn winprob_to_cp(w: WinProb) -> Result<PawnAdvantage, EvalError> {
    if w.0 <= 0.0 || w.0 >= 1.0 {
        return Err(EvalError::Boundary(w.0));
    }
    PawnAdvantage::new(pawns_from_probability(w.0), Perspective::SideToMove)
}

/// An engine score re-expressed for the gambiteer. Mates collapse to flags.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum GambiteerEval {
    Pawns(f64),
    /// The gambiteer mates in `n` moves.
    MateFor(u32),
    /// The gambiteer gets mated in `n` moves.
    MateAgainst(u32),
}

impl GambiteerEval {
    pub fn win_prob(self) -> WinProb {
        match self {
            GambiteerEval::Pawns(p) => WinProb(win_probability(p)),
            GambiteerEval::MateFor(_) => WinProb::ONE,
            GambiteerEval::MateAgainst(_) => WinProb::ZERO,
        }
    }

    pub fn advantage(self) -> Option<PawnAdvantage> {
        match self {
            GambiteerEval::Pawns(p) => PawnAdvantage::new(p, Perspective::Gambiteer).ok(),
            _ => None,
        }
    }

    /// Pawn value, or `None` for mates.
    pub fn pawns(self) -> Option<f64> {
        match self {
            GambiteerEval::Pawns(p) => Some(p),
            _ => None,
        }
    }

    /// Strictly favourable for the gambiteer.
    pub fn is_positive(self) -> bool {
        match self {
            GambiteerEval::Pawns(p) => p > 0.0,
            GambiteerEval::MateFor(_) => true,
            GambiteerEval::MateAgainst(_) => false,
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            GambiteerEval::Pawns(p) => p < 0.0,
            GambiteerEval::MateFor(_) => false,
            GambiteerEval::MateAgainst(_) => true,
        }
    }

    /// Sort key: mates sit beyond every pawn value.
    pub fn rank_key(self) -> f64 {
        match self {
            GambiteerEval::Pawns(p) => p,
            GambiteerEval::MateFor(n) => 1.0e6 - f64::from(n),
            GambiteerEval::MateAgainst(n) => -1.0e6 + f64::from(n),
        }
    }
}

impl fmt::Display for GambiteerEval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GambiteerEval::Pawns(p) => write!(f, "{p:+.2}"),
            GambiteerEval::MateFor(n) => write!(f, "Mate in {n}"),
            GambiteerEval::MateAgainst(n) => write!(f, "Mated in {n}"),
        }
    }
}

/// Flips a side-to-move engine score so that positive favours `gambiteer`.
pub fn to_gambiteer_perspective(
    score: EngineScore,
    gambiteer: Color,
    side_to_move: Color,
) -> GambiteerEval {
    let own = if gambiteer == side_to_move {
        score
    } else {
        score.flipped()
    };
    match own {
        EngineScore::Pawns(p) => GambiteerEval::Pawns(p),
        EngineScore::Mate(n) if n > 0 => GambiteerEval::MateFor(n.unsigned_abs()),
        EngineScore::Mate(n) => GambiteerEval::MateAgainst(n.unsigned_abs()),
    }
}

/// Inverse of [`to_gambiteer_perspective`].
pub fn from_gambiteer_perspective(
    eval: GambiteerEval,
    gambiteer: Color,
    side_to_move: Color,
) -> EngineScore {
    let own = match eval {
        GambiteerEval::Pawns(p) => EngineScore::Pawns(p),
        GambiteerEval::MateFor(n) => EngineScore::Mate(n as i32),
        GambiteerEval::MateAgainst(n) => EngineScore::Mate(-(n as i32)),
    };
    if gambiteer == side_to_move {
        own
    } else {
        own.flipped()
    }
}
