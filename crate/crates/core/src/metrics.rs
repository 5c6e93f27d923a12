//! Gambit statistics over continuation rows: expected value, volatility,
//! skewness, the value given up by the gambit, classification, the
//! optimality check and rankings.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::chess::Color;
use crate::eval::{EvalError, GambiteerEval, PawnAdvantage, WinProb};
use crate::notation::{parse_mainline, Mainline, MainlineError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no continuation rows")]
    EmptyRows,
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("probabilities sum to zero")]
    ZeroMass,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Whether row probabilities are used as observed (a top-k subset that
/// need not sum to one) or rescaled to sum to one.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum ProbabilityMode {
    Raw,
    #[default]
    Renormalized,
}

impl ProbabilityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbabilityMode::Raw => "raw",
            ProbabilityMode::Renormalized => "renorm",
        }
    }

    pub fn parse(s: &str) -> Option<ProbabilityMode> {
        match s {
            "raw" => Some(ProbabilityMode::Raw),
            "renorm" | "renormalized" => Some(ProbabilityMode::Renormalized),
            _ => None,
        }
    }
}

impl fmt::Display for ProbabilityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One opponent reply at the branch position.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationRow {
    /// The reply in SAN.
    pub label: String,
    /// Value after the reply, gambiteer perspective.
    pub q: GambiteerEval,
    pub probability: f64,
    /// Always `q.win_prob()`.
    pub win_prob: f64,
}

impl ContinuationRow {
    pub fn new(
        label: impl Into<String>,
        q: GambiteerEval,
        probability: f64,
    ) -> Result<ContinuationRow, MetricsError> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(MetricsError::InvalidProbability(probability));
        }
        Ok(ContinuationRow {
            label: label.into(),
            q,
            probability,
            win_prob: q.win_prob().value(),
        })
    }
}

/// Weighted mean, standard deviation and third standardized moment.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
    pub skew: f64,
}

/// `mean = Σ p x`, `sd² = Σ p (x - mean)²`, `skew = Σ p ((x - mean)/sd)³`,
/// with the weights taken as given. When every `x` is equal the spread and
/// skew are both zero.
pub fn weighted_moments(p: &[f64], x: &[f64]) -> Moments {
    debug_assert_eq!(p.len(), x.len());
    let mean: f64 = p.iter().zip(x).map(|(p, x)| p * x).sum();
    if x.windows(2).all(|w| w[0] == w[1]) {
        return Moments {
            mean,
            sd: 0.0,
            skew: 0.0,
        };
    }
    let var: f64 = p.iter().zip(x).map(|(p, x)| p * (x - mean).powi(2)).sum();
    let sd = var.sqrt();
    let skew = if sd > 0.0 {
        p.iter().zip(x).map(|(p, x)| p * ((x - mean) / sd).powi(3)).sum()
    } else {
        0.0
    };
    Moments { mean, sd, skew }
}

fn weights(rows: &[ContinuationRow], mode: ProbabilityMode) -> Result<Vec<f64>, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyRows);
    }
    let p: Vec<f64> = rows.iter().map(|r| r.probability).collect();
    match mode {
        ProbabilityMode::Raw => Ok(p),
        ProbabilityMode::Renormalized => {
            let mass: f64 = p.iter().sum();
            if mass <= 0.0 {
                return Err(MetricsError::ZeroMass);
            }
            Ok(p.into_iter().map(|p| p / mass).collect())
        }
    }
}

/// Moments of the continuation win probabilities under `mode`.
pub fn continuation_moments(
    rows: &[ContinuationRow],
    mode: ProbabilityMode,
) -> Result<Moments, MetricsError> {
    let p = weights(rows, mode)?;
    let w: Vec<f64> = rows.iter().map(|r| r.win_prob).collect();
    Ok(weighted_moments(&p, &w))
}

pub fn q_star(rows: &[ContinuationRow], mode: ProbabilityMode) -> Result<WinProb, MetricsError> {
    let m = continuation_moments(rows, mode)?;
    Ok(WinProb::new(m.mean.clamp(0.0, 1.0))?)
}

pub fn volatility(rows: &[ContinuationRow], mode: ProbabilityMode) -> Result<f64, MetricsError> {
    Ok(continuation_moments(rows, mode)?.sd)
}

pub fn skewness(rows: &[ContinuationRow], mode: ProbabilityMode) -> Result<f64, MetricsError> {
    Ok(continuation_moments(rows, mode)?.skew)
}

/// `Σ P·w` over the rows under `mode`.
pub fn weighted_win_prob(
    rows: &[ContinuationRow],
    mode: ProbabilityMode,
) -> Result<WinProb, MetricsError> {
    let p = weights(rows, mode)?;
    let s: f64 = p.iter().zip(rows).map(|(p, r)| p * r.win_prob).sum();
    Ok(WinProb::new(s.clamp(0.0, 1.0))?)
}

/// Dispersion of the per-row outcome products `P·w` (raw probabilities),
/// treated as an unweighted sample: population skewness and the `n - 1`
/// standard deviation.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct OutcomeStats {
    pub mean: f64,
    pub sd: f64,
    pub skew: f64,
}

pub fn outcome_stats(rows: &[ContinuationRow]) -> Result<OutcomeStats, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyRows);
    }
    let x: Vec<f64> = rows.iter().map(|r| r.probability * r.win_prob).collect();
    let n = x.len() as f64;
    let uniform = vec![1.0 / n; x.len()];
    let pop = weighted_moments(&uniform, &x);
    let sd = if x.len() > 1 {
        (x.iter().map(|v| (v - pop.mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(OutcomeStats {
        mean: pop.mean,
        sd,
        skew: pop.skew,
    })
}

/// `V - Q(s, a_G)`: what the gambit gives up against best play.
pub fn test_statistic(v: PawnAdvantage, q_gambit: PawnAdvantage) -> Result<f64, MetricsError> {
    Ok(v.minus(q_gambit)?)
}

/// The same on the win-probability scale.
pub fn test_statistic_winprob(v: WinProb, q_gambit: WinProb) -> f64 {
    v.value() - q_gambit.value()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Gambit,
    NonGambit,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Gambit => "gambit",
            Verdict::NonGambit => "non-gambit",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    /// Negative value at the gambit with at least one winning reply path.
    pub verdict: Verdict,
    /// Additionally every reply other than the opponent's best is positive.
    pub strict: bool,
}

pub fn classify_gambit(q_at_gambit: GambiteerEval, continuations: &[GambiteerEval]) -> Classification {
    let negative = q_at_gambit.is_negative();
    let upside = continuations.iter().any(|q| q.is_positive());
    let verdict = if negative && upside {
        Verdict::Gambit
    } else {
        Verdict::NonGambit
    };
    let best_reply = continuations
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.rank_key().total_cmp(&b.1.rank_key()).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let strict = verdict == Verdict::Gambit
        && continuations
            .iter()
            .enumerate()
            .all(|(i, q)| Some(i) == best_reply || q.is_positive());
    Classification { verdict, strict }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BellmanCheck {
    pub consistent: bool,
    /// `q_parent - q_child` when violated, else zero.
    pub gap: f64,
}

/// Optimal play never lowers the value: `q_child >= q_parent`.
pub fn bellman_check(q_parent: f64, q_child: f64) -> BellmanCheck {
    if q_child < q_parent {
        BellmanCheck {
            consistent: false,
            gap: q_parent - q_child,
        }
    } else {
        BellmanCheck {
            consistent: true,
            gap: 0.0,
        }
    }
}

/// A gambit line: its mainline, the ply of the gambit move and who plays it.
#[derive(Clone, Debug, PartialEq)]
pub struct GambitSpec {
    pub name: String,
    pub movetext: String,
    /// One-based ply of the gambit move within the mainline.
    pub gambit_ply: usize,
    pub gambiteer: Color,
    /// Number of opponent replies analysed at the end of the mainline.
    pub k: usize,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{name}: {source}")]
    Movetext { name: String, source: MainlineError },
    #[error("{name}: gambit ply {ply} outside the mainline of {len} plies")]
    PlyRange { name: String, ply: usize, len: usize },
    #[error("{name}: ply {ply} is played by {mover:?}, not the gambiteer")]
    WrongMover { name: String, ply: usize, mover: Color },
}

impl GambitSpec {
    pub fn mainline(&self) -> Result<Mainline, SpecError> {
        let line = parse_mainline(&self.movetext).map_err(|source| SpecError::Movetext {
            name: self.name.clone(),
            source,
        })?;
        if self.gambit_ply == 0 || self.gambit_ply > line.len() {
            return Err(SpecError::PlyRange {
                name: self.name.clone(),
                ply: self.gambit_ply,
                len: line.len(),
            });
        }
        let mover = line.steps[self.gambit_ply - 1].0.turn();
        if mover != self.gambiteer {
            return Err(SpecError::WrongMover {
                name: self.name.clone(),
                ply: self.gambit_ply,
                mover,
            });
        }
        Ok(line)
    }
}

/// Statistics of a report's continuation rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationStats {
    pub q_star: f64,
    pub volatility: f64,
    pub skewness: f64,
    /// `Σ P·w` with raw probabilities.
    pub weighted_win_prob_raw: f64,
    /// `Σ P·w` with renormalized probabilities.
    pub weighted_win_prob_renorm: f64,
    pub outcome: OutcomeStats,
    /// Moments of the pawn values, when no row is a mate.
    pub pawn_moments: Option<Moments>,
    pub mean_probability: f64,
    pub mean_win_prob: f64,
    /// Mean of the non-mate row values, in pawns.
    pub mean_q: Option<f64>,
    /// Mean of the per-row products `P·w` (raw probabilities).
    pub mean_weighted_row: f64,
}

impl ContinuationStats {
    pub fn compute(
        rows: &[ContinuationRow],
        mode: ProbabilityMode,
    ) -> Result<ContinuationStats, MetricsError> {
        let m = continuation_moments(rows, mode)?;
        let n = rows.len() as f64;
        let pawns: Vec<f64> = rows.iter().filter_map(|r| r.q.pawns()).collect();
        let pawn_moments = (pawns.len() == rows.len()).then(|| {
            let p = weights(rows, mode).expect("rows are nonempty");
            weighted_moments(&p, &pawns)
        });
        Ok(ContinuationStats {
            q_star: m.mean,
            volatility: m.sd,
            skewness: m.skew,
            weighted_win_prob_raw: weighted_win_prob(rows, ProbabilityMode::Raw)?.value(),
            weighted_win_prob_renorm: weighted_win_prob(rows, ProbabilityMode::Renormalized)?
                .value(),
            outcome: outcome_stats(rows)?,
            pawn_moments,
            mean_probability: rows.iter().map(|r| r.probability).sum::<f64>() / n,
            mean_win_prob: rows.iter().map(|r| r.win_prob).sum::<f64>() / n,
            mean_q: (!pawns.is_empty()).then(|| pawns.iter().sum::<f64>() / pawns.len() as f64),
            mean_weighted_row: rows.iter().map(|r| r.probability * r.win_prob).sum::<f64>() / n,
        })
    }
}

/// One point of the value-versus-ply series along the mainline.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    /// Plies played (0 = start position).
    pub ply: usize,
    /// SAN of the move that reached this position, empty at the start.
    pub san: String,
    pub q: GambiteerEval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GambitReport {
    pub spec: GambitSpec,
    /// Value right after the gambit move.
    pub initial_q: GambiteerEval,
    /// Value of the position before the gambit move.
    pub pre_gambit_q: GambiteerEval,
    /// Value at the branch position ending the mainline.
    pub current_q: GambiteerEval,
    pub rows: Vec<ContinuationRow>,
    pub mode: ProbabilityMode,
    pub stats: Option<ContinuationStats>,
    /// Pre-gambit minus initial value, in pawns.
    pub test_statistic: Option<f64>,
    /// `None` when the gambit value is negative but no replies were analysed.
    pub classification: Option<Classification>,
    pub bellman: Option<BellmanCheck>,
    pub engine: String,
    pub depth: Option<u32>,
    pub corpus: String,
    pub series: Vec<SeriesPoint>,
}

impl GambitReport {
    /// Assembles a report, deriving every statistic from the inputs.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        spec: GambitSpec,
        initial_q: GambiteerEval,
        pre_gambit_q: GambiteerEval,
        current_q: GambiteerEval,
        rows: Vec<ContinuationRow>,
        mode: ProbabilityMode,
        provenance: (String, Option<u32>, String),
        series: Vec<SeriesPoint>,
    ) -> Result<GambitReport, MetricsError> {
        let stats = if rows.is_empty() {
            None
        } else {
            Some(ContinuationStats::compute(&rows, mode)?)
        };
        let (test_statistic, bellman) = match (pre_gambit_q.pawns(), initial_q.pawns()) {
            (Some(v), Some(q)) => (Some(v - q), Some(bellman_check(v, q))),
            _ => (None, None),
        };
        let qs: Vec<GambiteerEval> = rows.iter().map(|r| r.q).collect();
        let classification = (!initial_q.is_negative() || !qs.is_empty())
            .then(|| classify_gambit(initial_q, &qs));
        let (engine, depth, corpus) = provenance;
        Ok(GambitReport {
            spec,
            initial_q,
            pre_gambit_q,
            current_q,
            rows,
            mode,
            stats,
            test_statistic,
            classification,
            bellman,
            engine,
            depth,
            corpus,
            series,
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RankKey {
    InitialQ,
    /// Weighted skewness of the win probabilities.
    Skew,
    /// Weighted standard deviation of the win probabilities.
    Volatility,
    /// Skewness of the outcome products.
    OutcomeSkew,
    OutcomeVolatility,
}

fn rank_value(r: &GambitReport, key: RankKey) -> Option<f64> {
    match key {
        RankKey::InitialQ => Some(r.initial_q.rank_key()),
        RankKey::Skew => r.stats.as_ref().map(|s| s.skewness),
        RankKey::Volatility => r.stats.as_ref().map(|s| s.volatility),
        RankKey::OutcomeSkew => r.stats.as_ref().map(|s| s.outcome.skew),
        RankKey::OutcomeVolatility => r.stats.as_ref().map(|s| s.outcome.sd),
    }
}

/// Ascending by `key`, ties by name; reports lacking the key come last.
pub fn rank_gambits(reports: &[GambitReport], key: RankKey) -> Vec<&GambitReport> {
    let mut out: Vec<&GambitReport> = reports.iter().collect();
    out.sort_by(|a, b| {
        let by_value = match (rank_value(a, key), rank_value(b, key)) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_value.then_with(|| a.spec.name.cmp(&b.spec.name))
    });
    out
}

/// Unweighted means across reports that have continuation rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub reports: usize,
    pub current_q: f64,
    pub pre_gambit_q: f64,
    pub continuation_q: f64,
    pub skewness: f64,
    pub volatility: f64,
    pub outcome_skew: f64,
    pub outcome_volatility: f64,
    pub player_probability: f64,
    pub win_prob: f64,
    /// Mean of `Σ P·w` per report under the report's mode.
    pub weighted_win_prob: f64,
    /// Mean over all rows of `P·w`.
    pub weighted_row_mean: f64,
    /// Mean player probability times mean win probability.
    pub weighted_product_of_means: f64,
}

pub fn aggregate_summary(reports: &[GambitReport]) -> Option<SummaryRow> {
    let with: Vec<(&GambitReport, &ContinuationStats)> = reports
        .iter()
        .filter_map(|r| r.stats.as_ref().map(|s| (r, s)))
        .collect();
    if with.is_empty() {
        return None;
    }
    let n = with.len() as f64;
    let mean = |f: &dyn Fn(&GambitReport, &ContinuationStats) -> f64| -> f64 {
        with.iter().map(|(r, s)| f(r, s)).sum::<f64>() / n
    };
    // Mate values have no pawn equivalent and are left out of pawn means.
    let pawn_mean = |f: &dyn Fn(&GambitReport) -> GambiteerEval| -> f64 {
        let v: Vec<f64> = with.iter().filter_map(|(r, _)| f(r).pawns()).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let player_probability = mean(&|_, s| s.mean_probability);
    let win_prob = mean(&|_, s| s.mean_win_prob);
    Some(SummaryRow {
        reports: with.len(),
        current_q: pawn_mean(&|r| r.current_q),
        pre_gambit_q: pawn_mean(&|r| r.pre_gambit_q),
        continuation_q: mean(&|_, s| s.mean_q.unwrap_or(0.0)),
        skewness: mean(&|_, s| s.skewness),
        volatility: mean(&|_, s| s.volatility),
        outcome_skew: mean(&|_, s| s.outcome.skew),
        outcome_volatility: mean(&|_, s| s.outcome.sd),
        player_probability,
        win_prob,
        weighted_win_prob: mean(&|r, s| match r.mode {
            ProbabilityMode::Raw => s.weighted_win_prob_raw,
            ProbabilityMode::Renormalized => s.weighted_win_prob_renorm,
        }),
        weighted_row_mean: mean(&|_, s| s.mean_weighted_row),
        weighted_product_of_means: player_probability * win_prob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Perspective;

    fn rows(p: &[f64], w: &[f64]) -> Vec<ContinuationRow> {
        p.iter()
            .zip(w)
            .map(|(&p, &w)| {
                let q = crate::eval::pawns_from_probability(w);
                ContinuationRow::new("m", GambiteerEval::Pawns(q), p).unwrap()
            })
            .collect()
    }

    #[test]
    fn degenerate_and_uniform() {
        let r = rows(&[1.0], &[0.7]);
        assert!((q_star(&r, ProbabilityMode::Renormalized).unwrap().value() - 0.7).abs() < 1e-12);
        let r = rows(&[0.25; 4], &[0.1, 0.2, 0.3, 0.6]);
        assert!((q_star(&r, ProbabilityMode::Raw).unwrap().value() - 0.3).abs() < 1e-12);
        let r = rows(&[0.2, 0.3, 0.5], &[0.4, 0.4, 0.4]);
        assert_eq!(volatility(&r, ProbabilityMode::Raw).unwrap(), 0.0);
        assert_eq!(skewness(&r, ProbabilityMode::Raw).unwrap(), 0.0);
    }

    #[test]
    fn two_point_volatility() {
        let r = rows(&[0.5, 0.5], &[0.4, 0.6]);
        assert!((volatility(&r, ProbabilityMode::Renormalized).unwrap() - 0.1).abs() < 1e-9);
        assert!(skewness(&r, ProbabilityMode::Renormalized).unwrap().abs() < 1e-9);
    }

    #[test]
    fn outlier_skews_right() {
        let r = rows(&[0.45, 0.45, 0.1], &[0.3, 0.35, 0.95]);
        assert!(skewness(&r, ProbabilityMode::Renormalized).unwrap() > 0.0);
    }

    #[test]
    fn empty_rows_are_errors() {
        assert!(matches!(q_star(&[], ProbabilityMode::Raw), Err(MetricsError::EmptyRows)));
        assert!(matches!(weighted_win_prob(&[], ProbabilityMode::Raw), Err(MetricsError::EmptyRows)));
        assert!(ContinuationRow::new("x", GambiteerEval::Pawns(0.0), 1.5).is_err());
    }

    #[test]
    fn test_statistic_units() {
        let g = |v| PawnAdvantage::new(v, Perspective::Gambiteer).unwrap();
        assert!((test_statistic(g(0.34), g(-0.32)).unwrap() - 0.66).abs() < 1e-12);
        assert_eq!(test_statistic(g(0.1), g(0.1)).unwrap(), 0.0);
        let w = PawnAdvantage::new(0.1, Perspective::White).unwrap();
        assert!(test_statistic(g(0.1), w).is_err());
    }

    #[test]
    fn classification_cases() {
        let p = GambiteerEval::Pawns;
        let c = classify_gambit(p(-2.56), &[p(-2.56), p(1.48), p(6.2), p(-1.74), p(-0.87)]);
        assert_eq!(c.verdict, Verdict::Gambit);
        assert!(!c.strict);
        let c = classify_gambit(p(-0.5), &[p(-0.5), p(0.2), GambiteerEval::MateFor(3)]);
        assert!(c.strict);
        assert_eq!(classify_gambit(p(0.39), &[p(1.0)]).verdict, Verdict::NonGambit);
        assert_eq!(classify_gambit(p(-1.0), &[p(-1.0), p(-0.2)]).verdict, Verdict::NonGambit);
    }

    #[test]
    fn bellman_cases() {
        let v = bellman_check(-0.57, -2.55);
        assert!(!v.consistent);
        assert!((v.gap - 1.98).abs() < 1e-12);
        assert_eq!(bellman_check(0.3, 0.3), BellmanCheck { consistent: true, gap: 0.0 });
        assert!(bellman_check(0.1, 0.4).consistent);
    }
}
