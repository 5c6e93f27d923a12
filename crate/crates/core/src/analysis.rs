//! End-to-end analysis of one gambit line: engine values along the mainline
//! and at each frequent reply, weighted by how often humans play them.

use thiserror::Error;

use crate::corpus::{query_transitions, CorpusError, CorpusIndex, DEFAULT_MIN_GAMES};
use crate::engine::{EngineError, Evaluator, SearchLimits};
use crate::eval::{to_gambiteer_perspective, GambiteerEval};
use crate::metrics::{
    ContinuationRow, GambitReport, GambitSpec, MetricsError, ProbabilityMode, SeriesPoint,
    SpecError,
};
use crate::notation::render_san;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub limits: SearchLimits,
    pub mode: ProbabilityMode,
    pub min_games: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            limits: SearchLimits::default(),
            mode: ProbabilityMode::default(),
            min_games: DEFAULT_MIN_GAMES,
        }
    }
}

/// Analyses `spec`. Without a corpus only the mainline values are measured
/// and the report has no continuation rows.
///
/// Rows are the `spec.k` most frequent replies at the end of the mainline,
/// carrying their raw corpus frequency.
pub fn analyze_gambit(
    spec: &GambitSpec,
    evaluator: &mut Evaluator,
    corpus: Option<&CorpusIndex>,
    opts: &AnalysisOptions,
) -> Result<GambitReport, AnalysisError> {
    let line = spec.mainline()?;
    let sans = line.sans();
    let mut series = Vec::with_capacity(line.len() + 1);
    for ply in 0..=line.len() {
        let pos = line.position_at(ply).expect("ply within mainline");
        let score = evaluator.value(pos, &opts.limits)?;
        series.push(SeriesPoint {
            ply,
            san: if ply == 0 { String::new() } else { sans[ply - 1].clone() },
            q: to_gambiteer_perspective(score, spec.gambiteer, pos.turn()),
        });
    }
    let q_at = |ply: usize| -> GambiteerEval { series[ply].q };
    let pre_gambit_q = q_at(spec.gambit_ply - 1);
    let initial_q = q_at(spec.gambit_ply);
    let current_q = q_at(line.len());

    let mut rows = Vec::new();
    if let Some(index) = corpus {
        let branch = &line.final_position;
        let dist = query_transitions(index, branch, opts.min_games)?;
        let chosen: Vec<_> = dist.entries.iter().take(spec.k).collect();
        let moves: Vec<_> = chosen.iter().map(|e| e.mv).collect();
        let scores = evaluator.move_values(branch, &moves, &opts.limits)?;
        for (entry, score) in chosen.iter().zip(scores) {
            rows.push(ContinuationRow::new(
                render_san(branch, &entry.mv),
                to_gambiteer_perspective(score, spec.gambiteer, branch.turn()),
                entry.probability,
            )?);
        }
    }

    let provenance = (
        evaluator.identity()?,
        opts.limits.depth,
        corpus.map_or_else(|| "-".to_string(), |c| c.id.clone()),
    );
    Ok(GambitReport::assemble(
        spec.clone(),
        initial_q,
        pre_gambit_q,
        current_q,
        rows,
        opts.mode,
        provenance,
        series,
    )?)
}
