//! Run configuration: a TOML file with top-level settings, an `[engine]`
//! table and one `[[gambit]]` table per line to analyse.
//!
//! ```toml
//! mode = "renorm"            # or "raw"
//! corpus = "corpus.idx"      # relative paths resolve against this file
//! cache = "evals.txt"
//! out = "out"
//! min_games = 25
//!
//! [engine]
//! program = "stockfish"     # bare names are looked up on PATH
//! args = []
//! depth = 20
//! multipv = 5
//! hash_mb = 256
//! identity = "Stockfish 16"  # optional, pins cached results to one engine
//! options = { Threads = "4" }
//!
//! [[gambit]]
//! name = "stafford-1"
//! title = "Stafford Gambit, 5.d3"
//! movetext = "1. e4 e5 2. Nf3 Nf6 3. Nxe5 Nc6 4. Nxc6 dxc6 5. d3 Bc5"
//! gambit_ply = 6
//! gambiteer = "black"
//! continuations = true       # false: mainline values only
//! ```
//!
//! Without `[[gambit]]` tables the built-in catalog is used.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use gambit_core::catalog::CATALOG;
use gambit_core::chess::Color;
use gambit_core::corpus::DEFAULT_MIN_GAMES;
use gambit_core::engine::{EngineLaunch, SearchLimits, SessionOptions};
use gambit_core::metrics::{GambitSpec, ProbabilityMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<String>,
    pub corpus: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub min_games: Option<u64>,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default, rename = "gambit")]
    pub gambits: Vec<GambitConfig>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub program: Option<PathBuf>,
    #[serde(default)]
    pub args: Vec<String>,
    pub depth: Option<u32>,
    pub multipv: Option<u32>,
    pub hash_mb: Option<u32>,
    pub identity: Option<String>,
    pub search_timeout_secs: Option<u64>,
    #[serde(default)]
    pub options: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GambitConfig {
    pub name: String,
    pub title: Option<String>,
    pub movetext: String,
    pub gambit_ply: usize,
    pub gambiteer: String,
    pub k: Option<usize>,
    #[serde(default = "yes")]
    pub continuations: bool,
}

fn yes() -> bool {
    true
}

/// Command-line values that override the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub engine: Option<PathBuf>,
    pub depth: Option<u32>,
    pub multipv: Option<u32>,
    pub corpus: Option<PathBuf>,
    pub mode: Option<ProbabilityMode>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct GambitEntry {
    pub spec: GambitSpec,
    pub title: Option<String>,
    pub continuations: bool,
}

#[derive(Debug)]
pub struct RunConfig {
    pub gambits: Vec<GambitEntry>,
    pub engine: Option<(EngineLaunch, SessionOptions)>,
    pub identity: Option<String>,
    pub limits: SearchLimits,
    pub corpus: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub out: PathBuf,
    pub mode: ProbabilityMode,
    pub min_games: u64,
}

impl RunConfig {
    pub fn gambit(&self, name: &str) -> Option<&GambitEntry> {
        self.gambits.iter().find(|g| g.spec.name == name)
    }
}

/// The built-in catalog as a config file.
pub fn catalog_config() -> ConfigFile {
    ConfigFile {
        gambits: CATALOG
            .iter()
            .map(|e| GambitConfig {
                name: e.name.to_string(),
                title: Some(e.title.to_string()),
                movetext: e.movetext.to_string(),
                gambit_ply: e.gambit_ply,
                gambiteer: color_name(e.gambiteer).to_string(),
                k: None,
                continuations: e.table.is_some(),
            })
            .collect(),
        ..ConfigFile::default()
    }
}

fn color_name(c: Color) -> &'static str {
    match c {
        Color::White => "white",
        Color::Black => "black",
    }
}

pub fn load(path: Option<&Path>, over: &Overrides) -> anyhow::Result<RunConfig> {
    let (file, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let file: ConfigFile =
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (file, base)
        }
        None => (ConfigFile::default(), PathBuf::new()),
    };
    resolve(file, &base, over)
}

fn resolve(mut file: ConfigFile, base: &Path, over: &Overrides) -> anyhow::Result<RunConfig> {
    if file.gambits.is_empty() {
        file.gambits = catalog_config().gambits;
    }
    let rel = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

    let mode = match (over.mode, &file.mode) {
        (Some(m), _) => m,
        (None, Some(s)) => ProbabilityMode::parse(s).with_context(|| format!("unknown mode '{s}'"))?,
        (None, None) => ProbabilityMode::default(),
    };
    let depth = over.depth.or(file.engine.depth).unwrap_or(20);
    let multipv = over.multipv.or(file.engine.multipv).unwrap_or(5);
    if depth == 0 || multipv == 0 {
        bail!("depth and multipv must be positive");
    }
    let limits = SearchLimits {
        depth: Some(depth),
        movetime_ms: None,
        multipv,
    };

    // A bare program name is looked up on PATH.
    let program = over.engine.clone().or(file.engine.program.clone().map(|p| {
        if p.components().count() > 1 {
            rel(p)
        } else {
            p
        }
    }));
    let engine = program.map(|program| {
        let mut launch = EngineLaunch::new(program);
        for a in &file.engine.args {
            launch = launch.arg(a);
        }
        let mut options = SessionOptions {
            multipv,
            hash_mb: file.engine.hash_mb,
            extra_options: file.engine.options.clone().into_iter().collect(),
            ..SessionOptions::default()
        };
        if let Some(s) = file.engine.search_timeout_secs {
            options.search_timeout = Duration::from_secs(s);
        }
        (launch, options)
    });

    let mut gambits: Vec<GambitEntry> = Vec::new();
    for g in file.gambits {
        let gambiteer = match g.gambiteer.to_ascii_lowercase().as_str() {
            "white" | "w" => Color::White,
            "black" | "b" => Color::Black,
            other => bail!("{}: gambiteer must be white or black, not '{other}'", g.name),
        };
        if gambits.iter().any(|x| x.spec.name == g.name) {
            bail!("duplicate gambit name '{}'", g.name);
        }
        let spec = GambitSpec {
            name: g.name,
            movetext: g.movetext,
            gambit_ply: g.gambit_ply,
            gambiteer,
            k: g.k.unwrap_or(multipv as usize),
        };
        spec.mainline()?;
        gambits.push(GambitEntry {
            spec,
            title: g.title,
            continuations: g.continuations,
        });
    }

    Ok(RunConfig {
        gambits,
        engine,
        identity: file.engine.identity,
        limits,
        corpus: over.corpus.clone().or(file.corpus.map(&rel)),
        cache: over.cache.clone().or(file.cache.map(&rel)),
        out: over.out.clone().or(file.out.map(&rel)).unwrap_or_else(|| PathBuf::from("gambit-out")),
        mode,
        min_games: file.min_games.unwrap_or(DEFAULT_MIN_GAMES),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_matches_catalog() {
        let text = include_str!("../../../config/gambits.toml");
        let file: ConfigFile = toml::from_str(text).unwrap();
        let shipped = resolve(file, Path::new(""), &Overrides::default()).unwrap();
        let builtin = resolve(ConfigFile::default(), Path::new(""), &Overrides::default()).unwrap();
        let names = |c: &RunConfig| -> Vec<(GambitSpec, bool)> {
            c.gambits.iter().map(|g| (g.spec.clone(), g.continuations)).collect()
        };
        assert_eq!(names(&shipped), names(&builtin));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |text: &str| {
            let file: ConfigFile = toml::from_str(text).unwrap();
            resolve(file, Path::new(""), &Overrides::default()).is_err()
        };
        assert!(bad("mode = \"weird\""));
        assert!(bad("[[gambit]]\nname = \"x\"\nmovetext = \"1. e4 e5 2. Ke3\"\ngambit_ply = 1\ngambiteer = \"white\""));
        assert!(bad("[[gambit]]\nname = \"x\"\nmovetext = \"1. e4 e5\"\ngambit_ply = 2\ngambiteer = \"white\""));
        assert!(bad("[[gambit]]\nname = \"x\"\nmovetext = \"1. e4\"\ngambit_ply = 1\ngambiteer = \"red\""));
        assert!(toml::from_str::<ConfigFile>("colour = 1").is_err());
    }

    #[test]
    fn paths_resolve_against_config_dir_and_flags_win() {
        let file: ConfigFile =
            toml::from_str("corpus = \"c.idx\"\ncache = \"/abs/e.txt\"\n[engine]\ndepth = 12").unwrap();
        let over = Overrides {
            depth: Some(8),
            ..Overrides::default()
        };
        let c = resolve(file, Path::new("/cfg"), &over).unwrap();
        assert_eq!(c.corpus, Some(PathBuf::from("/cfg/c.idx")));
        assert_eq!(c.cache, Some(PathBuf::from("/abs/e.txt")));
        assert_eq!(c.limits.depth, Some(8));
        assert_eq!(c.gambits.len(), CATALOG.len());
    }
}
