use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use gambit_core::analysis::{analyze_gambit, AnalysisError, AnalysisOptions};
use gambit_core::corpus::{ingest_pgn, load_index, save_index, CorpusError, CorpusIndex};
use gambit_core::engine::{run_mock, EngineError, EvalCache, Evaluator, MockBehavior, MockScript};
use gambit_core::metrics::GambitReport;
use log::{info, warn};

use crate::config::{GambitEntry, RunConfig};
use crate::report::{self, OutputFile, SkewBasis};
use crate::selfcheck::{self, Perturbation};
use crate::CliError;

fn analysis_error(name: &str, e: AnalysisError) -> CliError {
    let msg = format!("{name}: {e}");
    match e {
        AnalysisError::Engine(_) => CliError::Engine(msg),
        AnalysisError::Corpus(_) => CliError::Corpus(msg),
        AnalysisError::Spec(_) => CliError::Config(msg),
        AnalysisError::Metrics(_) => CliError::Other(msg),
    }
}

fn corpus_error(path: &Path, e: CorpusError) -> CliError {
    CliError::Corpus(format!("{}: {e}", path.display()))
}

/// Writes every file into `dir`, each through a temporary file and rename.
fn write_files(dir: &Path, files: &[OutputFile]) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Other(format!("writing to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io_err)?;
    for (name, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
        tmp.write_all(bytes).map_err(io_err)?;
        tmp.persist(dir.join(name)).map_err(|e| io_err(e.error))?;
    }
    Ok(())
}

struct Pipeline {
    evaluator: Evaluator,
    corpus: Option<CorpusIndex>,
    options: AnalysisOptions,
}

impl Pipeline {
    fn open(cfg: &RunConfig, gambits: &[&GambitEntry]) -> Result<Pipeline, CliError> {
        let wants_corpus = gambits.iter().any(|g| g.continuations);
        let corpus = match (&cfg.corpus, wants_corpus) {
            (Some(path), true) => Some(load_index(path).map_err(|e| corpus_error(path, e))?),
            (None, true) => {
                warn!("no corpus configured, continuation statistics are skipped");
                None
            }
            _ => None,
        };
        let cache = match &cfg.cache {
            Some(path) => EvalCache::load(path)
                .map_err(|e| CliError::Engine(format!("{}: {e}", path.display())))?,
            None => EvalCache::new(),
        };
        if cfg.engine.is_none() {
            info!("no engine configured, using cached evaluations only");
        }
        Ok(Pipeline {
            evaluator: Evaluator::new(cfg.engine.clone(), cache, cfg.identity.clone()),
            corpus,
            options: AnalysisOptions {
                limits: cfg.limits,
                mode: cfg.mode,
                min_games: cfg.min_games,
            },
        })
    }

    fn analyze(&mut self, g: &GambitEntry) -> Result<GambitReport, CliError> {
        let corpus = if g.continuations { self.corpus.as_ref() } else { None };
        analyze_gambit(&g.spec, &mut self.evaluator, corpus, &self.options)
            .map_err(|e| analysis_error(&g.spec.name, e))
    }

    fn save_cache(self, cfg: &RunConfig) -> Result<(), CliError> {
        if let Some(path) = &cfg.cache {
            info!("{} engine searches", self.evaluator.searches);
            self.evaluator
                .into_cache()
                .save(path)
                .map_err(|e| CliError::Engine(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn select<'a>(cfg: &'a RunConfig, names: &[String]) -> Result<Vec<&'a GambitEntry>, CliError> {
    if names.is_empty() {
        return Ok(cfg.gambits.iter().collect());
    }
    names
        .iter()
        .map(|n| cfg.gambit(n).ok_or_else(|| CliError::Config(format!("unknown gambit '{n}'"))))
        .collect()
}

/// Analyses the named gambits (all when empty). Nothing is written unless
/// every analysis succeeds.
pub fn analyze(cfg: &RunConfig, names: &[String]) -> Result<(), CliError> {
    let gambits = select(cfg, names)?;
    let mut pipeline = Pipeline::open(cfg, &gambits)?;
    let mut files = Vec::new();
    let mut result = Ok(());
    for g in &gambits {
        match pipeline.analyze(g) {
            Ok(r) => {
                println!(
                    "{:<20} initial Q {:>9}  T(G) {}",
                    r.spec.name,
                    r.initial_q.to_string(),
                    r.test_statistic.map_or("-".to_string(), |t| format!("{t:+.2}"))
                );
                files.extend(report::gambit_files(&r, g.title.as_deref()));
            }
            Err(e) => {
                result = Err(e);
                break;
            }
        }
    }
    pipeline.save_cache(cfg)?;
    result?;
    write_files(&cfg.out, &files)?;
    println!("wrote {} files to {}", files.len(), cfg.out.display());
    Ok(())
}

/// Ranks every configured gambit. Failures are listed and the rest ranked.
pub fn rank(cfg: &RunConfig, basis: SkewBasis) -> Result<(), CliError> {
    let gambits = select(cfg, &[])?;
    let mut pipeline = Pipeline::open(cfg, &gambits)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for g in &gambits {
        match pipeline.analyze(g) {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("error: {e}");
                failures.push((g.spec.name.clone(), e.to_string()));
            }
        }
    }
    pipeline.save_cache(cfg)?;
    let files = report::ranking_files(&reports, &failures, basis);
    write_files(&cfg.out, &files)?;
    if let Some((_, text)) = files.iter().find(|(n, _)| n == "ranking.txt") {
        print!("{}", String::from_utf8_lossy(text));
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Rank(failures.len()))
    }
}

pub fn corpus_build(
    cfg: &RunConfig,
    inputs: &[PathBuf],
    id: Option<String>,
    max_ply: u32,
) -> Result<(), CliError> {
    let out = cfg
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Config("no corpus path given (--corpus or config)".into()))?;
    let id = id.unwrap_or_else(|| {
        inputs
            .iter()
            .filter_map(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("+")
    });
    let mut index = CorpusIndex::new(id, max_ply);
    for path in inputs {
        let file = File::open(path).map_err(|e| corpus_error(path, e.into()))?;
        ingest_pgn(&mut index, BufReader::new(file)).map_err(|e| corpus_error(path, e))?;
    }
    let s = &index.stats;
    if s.games_read == 0 {
        warn!("no games read, the index is empty");
    }
    save_index(&index, out).map_err(|e| corpus_error(out, e))?;
    println!("corpus {}", index.id);
    println!("games read     {}", s.games_read);
    println!("games skipped  {}", s.games_skipped);
    println!("plies indexed  {}", s.plies_indexed);
    println!("positions      {}", index.positions());
    println!("wrote {}", out.display());
    Ok(())
}

pub fn selfcheck(perturb: Option<Perturbation>) -> Result<(), CliError> {
    let results = selfcheck::run(perturb);
    let mut failed = Vec::new();
    for r in &results {
        println!("{}", r.line());
        if r.outcome.is_err() {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::SelfCheck(failed.join(", ")))
    }
}

pub fn mock_engine(script: Option<&Path>) -> Result<(), CliError> {
    let script = match script {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            MockScript::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => MockScript::new(),
    };
    let stdout = io::BufWriter::new(io::stdout().lock());
    run_mock(script, MockBehavior::default(), io::stdin().lock(), stdout)
        .map_err(|e| CliError::Engine(EngineError::from(e).to_string()))
}
