//! Persistent evaluation cache and a cache-first evaluator.
//!
//! File format (UTF-8, one record per line, sorted):
//!
//! ```text
//! # gambit eval cache v1
//! <key hex>\t<halfmove clock>\t<depth>\t<engine identity>\tcp <N> | mate <N>
//! ```
//!
//! Scores are from the side to move of the keyed position. Only fixed-depth
//! searches are cached; movetime results are not reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::score::{EngineScore, SearchLimits};
use super::session::{EngineLaunch, EngineSession, SessionOptions};
use super::{terminal_score, EngineError, EvalKey};
use crate::chess::{Move, Position, PositionKey};
use crate::notation::render_fen;

const HEADER: &str = "# gambit eval cache v1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalCache {
    entries: BTreeMap<(EvalKey, u32, String), EngineScore>,
}

impl EvalCache {
    pub fn new() -> EvalCache {
        EvalCache::default()
    }

    /// Loads a cache file; a missing file is an empty cache.
    pub fn load(path: &Path) -> Result<EvalCache, EngineError> {
        match fs::read_to_string(path) {
            Ok(text) => EvalCache::parse(&text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(EvalCache::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn parse(text: &str) -> Result<EvalCache, EngineError> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(EngineError::Cache("missing or unsupported header".into()));
        }
        let mut cache = EvalCache::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || EngineError::Cache(format!("malformed record on line {}", i + 2));
            let fields: Vec<&str> = line.split('\t').collect();
            let [key, halfmove, depth, identity, score] = fields[..] else {
                return Err(bad());
            };
            let key = EvalKey {
                position: PositionKey::parse_hex(key).ok_or_else(bad)?,
                halfmove: halfmove.parse().map_err(|_| bad())?,
            };
            let depth: u32 = depth.parse().map_err(|_| bad())?;
            let (kind, value) = score.split_once(' ').ok_or_else(bad)?;
            let score = EngineScore::parse_uci(kind, value).ok_or_else(bad)?;
            cache.entries.insert((key, depth, identity.to_string()), score);
        }
        Ok(cache)
    }

    pub fn render(&self) -> String {
        let mut out = format!("{HEADER}\n");
        for ((key, depth, identity), score) in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{depth}\t{identity}\t{}\n",
                key.position,
                key.halfmove,
                score.to_uci()
            ));
        }
        out
    }

    /// Writes via a temporary file and rename.
    pub fn save(&self, path: &Path) -> Result<(), EngineError> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.render().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn get(&self, pos: &Position, depth: u32, identity: &str) -> Option<EngineScore> {
        self.entries.get(&(EvalKey::of(pos), depth, identity.to_string())).copied()
    }

    pub fn insert(&mut self, pos: &Position, depth: u32, identity: &str, score: EngineScore) {
        self.entries.insert((EvalKey::of(pos), depth, identity.to_string()), score);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn identities(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|(_, _, id)| id.as_str()).collect()
    }
}

/// Position values from the cache, falling back to a lazily started engine.
pub struct Evaluator {
    launch: Option<(EngineLaunch, SessionOptions)>,
    session: Option<EngineSession>,
    cache: EvalCache,
    identity: Option<String>,
    /// Engine searches performed (cache misses).
    pub searches: usize,
}

impl Evaluator {
    pub fn new(
        launch: Option<(EngineLaunch, SessionOptions)>,
        cache: EvalCache,
        identity: Option<String>,
    ) -> Evaluator {
        Evaluator {
            launch,
            session: None,
            cache,
            identity,
            searches: 0,
        }
    }

    pub fn cache(&self) -> &EvalCache {
        &self.cache
    }

    pub fn into_cache(self) -> EvalCache {
        self.cache
    }

    /// Identity under which results are cached: the configured one, else the
    /// only identity present in the cache, else the engine's `id name`.
    pub fn identity(&mut self) -> Result<String, EngineError> {
        if let Some(id) = &self.identity {
            return Ok(id.clone());
        }
        let ids = self.cache.identities();
        if ids.len() == 1 {
            let id = ids.into_iter().next().unwrap_or_default().to_string();
            self.identity = Some(id.clone());
            return Ok(id);
        }
        let id = self.session()?.identity().to_string();
        self.identity = Some(id.clone());
        Ok(id)
    }

    fn session(&mut self) -> Result<&mut EngineSession, EngineError> {
        if self.session.is_none() {
            let Some((launch, options)) = &self.launch else {
                return Err(EngineError::NoEngine("engine search".into()));
            };
            let session = EngineSession::open(launch, options.clone())?;
            if let Some(expected) = &self.identity {
                if expected != session.identity() {
                    return Err(EngineError::IdentityMismatch {
                        expected: expected.clone(),
                        found: session.identity().to_string(),
                    });
                }
            }
            self.session = Some(session);
        }
        Ok(self.session.as_mut().expect("session just opened"))
    }

    /// Engine value of `pos` from its side to move.
    pub fn value(&mut self, pos: &Position, limits: &SearchLimits) -> Result<EngineScore, EngineError> {
        if let Some(s) = terminal_score(pos) {
            return Ok(s);
        }
        let identity = self.identity()?;
        if let Some(depth) = limits.depth {
            if let Some(s) = self.cache.get(pos, depth, &identity) {
                return Ok(s);
            }
            if self.launch.is_none() {
                return Err(EngineError::NoEngine(render_fen(pos)));
            }
        }
        let lim = SearchLimits {
            multipv: 1,
            ..*limits
        };
        let result = self.session()?.evaluate(pos, &lim)?;
        self.searches += 1;
        if let Some(depth) = limits.depth {
            self.cache.insert(pos, depth, &identity, result.value());
        }
        Ok(result.value())
    }

    /// Score of each move from the mover's perspective (negated child value).
    pub fn move_values(
        &mut self,
        pos: &Position,
        moves: &[Move],
        limits: &SearchLimits,
    ) -> Result<Vec<EngineScore>, EngineError> {
        let legal = pos.legal_moves();
        moves
            .iter()
            .map(|m| {
                if !legal.contains(m) {
                    return Err(EngineError::IllegalMove(m.uci()));
                }
                let child = pos.play_unchecked(m);
                self.value(&child, limits).map(EngineScore::flipped)
            })
            .collect()
    }
}
