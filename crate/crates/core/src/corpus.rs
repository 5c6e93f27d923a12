//! Human move frequencies from PGN corpora.
//!
//! The on-disk index is little-endian binary:
//!
//! ```text
//! magic    8 bytes  "GMBTIDX\0"
//! version  u32      currently 1
//! crc32    u32      checksum of the payload
//! payload  ...      see `encode_payload`
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use log::warn;
use thiserror::Error;

use crate::chess::{Move, Position, PositionKey, Role, Square};
use crate::notation::{parse_pgn, GameRecord, PgnErrorKind};

pub const INDEX_MAGIC: &[u8; 8] = b"GMBTIDX\0";
pub const INDEX_VERSION: u32 = 1;
pub const DEFAULT_MIN_GAMES: u64 = 25;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("only {found} games reach this position, {required} required")]
    InsufficientData { found: u64, required: u64 },
    #[error("none of the requested moves has any weight")]
    EmptySupport,
    #[error("index file is corrupt: {0}")]
    Corrupt(String),
    #[error("index version {found} is not supported (expected {INDEX_VERSION})")]
    VersionMismatch { found: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub games_read: u64,
    pub games_skipped: u64,
    pub plies_indexed: u64,
}

/// A move packed as `from | to << 6 | promotion << 12`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct PackedMove(u16);

impl PackedMove {
    fn pack(m: &Move) -> PackedMove {
        let promo = match m.promotion {
            None => 0,
            Some(Role::Knight) => 1,
            Some(Role::Bishop) => 2,
            Some(Role::Rook) => 3,
            Some(_) => 4,
        };
        PackedMove(m.from.index() as u16 | (m.to.index() as u16) << 6 | promo << 12)
    }

    fn matches(self, m: &Move) -> bool {
        PackedMove::pack(m) == self
    }

    fn describe(self) -> String {
        let sq = |i: u16| Square::new((i & 63) as u8).map_or("??".into(), |s| s.to_string());
        format!("{}{}", sq(self.0), sq(self.0 >> 6))
    }
}

/// Successor-move counts per position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusIndex {
    pub id: String,
    pub max_ply: u32,
    pub stats: IngestStats,
    counters: BTreeMap<PositionKey, BTreeMap<PackedMove, u32>>,
}

impl CorpusIndex {
    pub fn new(id: impl Into<String>, max_ply: u32) -> CorpusIndex {
        CorpusIndex {
            id: id.into(),
            max_ply,
            ..CorpusIndex::default()
        }
    }

    pub fn positions(&self) -> usize {
        self.counters.len()
    }

    /// Raw successor counts at `pos`, in move order, for legal moves only.
    pub fn counts(&self, pos: &Position) -> Vec<(Move, u64)> {
        let Some(counter) = self.counters.get(&pos.key()) else {
            return Vec::new();
        };
        let legal = pos.legal_moves();
        let mut out = Vec::new();
        for (&packed, &n) in counter {
            match legal.iter().find(|m| packed.matches(m)) {
                Some(m) => out.push((*m, u64::from(n))),
                None => warn!("index entry {} is not legal here; ignored", packed.describe()),
            }
        }
        out
    }

    /// Indexes one game's mainline up to `max_ply` plies.
    pub fn add_game(&mut self, game: &GameRecord) {
        self.stats.games_read += 1;
        for (pos, m) in game.positions().take(self.max_ply as usize) {
            let slot = self
                .counters
                .entry(pos.key())
                .or_default()
                .entry(PackedMove::pack(&m))
                .or_insert(0);
            *slot = slot.saturating_add(1);
            self.stats.plies_indexed += 1;
        }
    }

    /// Adds every count from `other`.
    pub fn merge(&mut self, other: &CorpusIndex) {
        for (key, counter) in &other.counters {
            let mine = self.counters.entry(*key).or_default();
            for (m, n) in counter {
                let slot = mine.entry(*m).or_insert(0);
                *slot = slot.saturating_add(*n);
            }
        }
        self.stats.games_read += other.stats.games_read;
        self.stats.games_skipped += other.stats.games_skipped;
        self.stats.plies_indexed += other.stats.plies_indexed;
    }

    fn encode_payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let id = self.id.as_bytes();
        out.extend((id.len() as u32).to_le_bytes());
        out.extend(id);
        out.extend(self.max_ply.to_le_bytes());
        out.extend(self.stats.games_read.to_le_bytes());
        out.extend(self.stats.games_skipped.to_le_bytes());
        out.extend(self.stats.plies_indexed.to_le_bytes());
        out.extend((self.counters.len() as u64).to_le_bytes());
        for (key, counter) in &self.counters {
            out.extend(key.0.to_le_bytes());
            out.extend((counter.len() as u32).to_le_bytes());
            for (m, n) in counter {
                out.extend(m.0.to_le_bytes());
                out.extend(n.to_le_bytes());
            }
        }
        out
    }

    fn decode_payload(bytes: &[u8]) -> Result<CorpusIndex, CorpusError> {
        let mut r = ByteReader { bytes, pos: 0 };
        let id_len = r.u32()? as usize;
        let id = String::from_utf8(r.take(id_len)?.to_vec())
            .map_err(|_| CorpusError::Corrupt("corpus id is not UTF-8".into()))?;
        let max_ply = r.u32()?;
        let stats = IngestStats {
            games_read: r.u64()?,
            games_skipped: r.u64()?,
            plies_indexed: r.u64()?,
        };
        let n = r.u64()?;
        let mut counters = BTreeMap::new();
        for _ in 0..n {
            let key = PositionKey(r.u64()?);
            let k = r.u32()?;
            let mut counter = BTreeMap::new();
            for _ in 0..k {
                let m = PackedMove(r.u16()?);
                counter.insert(m, r.u32()?);
            }
            counters.insert(key, counter);
        }
        if r.pos != bytes.len() {
            return Err(CorpusError::Corrupt("trailing bytes".into()));
        }
        Ok(CorpusIndex {
            id,
            max_ply,
            stats,
            counters,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = self.encode_payload();
        let mut out = Vec::with_capacity(payload.len() + 16);
        out.extend(INDEX_MAGIC);
        out.extend(INDEX_VERSION.to_le_bytes());
        out.extend(crc32fast::hash(&payload).to_le_bytes());
        out.extend(payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<CorpusIndex, CorpusError> {
        if bytes.len() < 16 || &bytes[..8] != INDEX_MAGIC {
            return Err(CorpusError::Corrupt("missing header".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != INDEX_VERSION {
            return Err(CorpusError::VersionMismatch { found: version });
        }
        let crc = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        let payload = &bytes[16..];
        if crc32fast::hash(payload) != crc {
            return Err(CorpusError::Corrupt("checksum mismatch".into()));
        }
        CorpusIndex::decode_payload(payload)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CorpusError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CorpusError::Corrupt("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, CorpusError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CorpusError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CorpusError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Writes the index atomically.
pub fn save_index(index: &CorpusIndex, path: &Path) -> Result<(), CorpusError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&index.to_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<CorpusIndex, CorpusError> {
    CorpusIndex::from_bytes(&fs::read(path)?)
}

/// Streams PGN into `index`. Unparseable games are counted and skipped;
/// read failures abort.
pub fn ingest_pgn<R: BufRead>(index: &mut CorpusIndex, reader: R) -> Result<(), CorpusError> {
    ingest_pgn_filtered(index, reader, |_| true)
}

/// Like [`ingest_pgn`], keeping only games accepted by `keep` (for example
/// a header predicate). Rejected games count as skipped.
pub fn ingest_pgn_filtered<R: BufRead>(
    index: &mut CorpusIndex,
    reader: R,
    keep: impl Fn(&GameRecord) -> bool,
) -> Result<(), CorpusError> {
    for item in parse_pgn(reader) {
        match item {
            Ok(game) if keep(&game) => index.add_game(&game),
            Ok(_) => index.stats.games_skipped += 1,
            Err(e) => {
                if let PgnErrorKind::Io(msg) = e.kind {
                    return Err(CorpusError::Io(io::Error::other(msg)));
                }
                warn!("skipping {e}");
                index.stats.games_skipped += 1;
            }
        }
    }
    Ok(())
}

pub fn build_index<R: BufRead>(reader: R, max_ply: u32) -> Result<CorpusIndex, CorpusError> {
    let mut index = CorpusIndex::new("", max_ply);
    ingest_pgn(&mut index, reader)?;
    Ok(index)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionEntry {
    pub mv: Move,
    pub count: u64,
    pub probability: f64,
}

/// Empirical distribution of the next move at a branch position.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDistribution {
    pub branch: PositionKey,
    pub total: u64,
    /// Ordered by count (descending), then UCI text.
    pub entries: Vec<TransitionEntry>,
    pub provenance: String,
}

impl TransitionDistribution {
    pub fn probability(&self, m: &Move) -> f64 {
        self.entries
            .iter()
            .find(|e| e.mv == *m)
            .map_or(0.0, |e| e.probability)
    }

    pub fn count(&self, m: &Move) -> u64 {
        self.entries.iter().find(|e| e.mv == *m).map_or(0, |e| e.count)
    }
}

fn sort_entries(entries: &mut [TransitionEntry]) {
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.mv.uci().cmp(&b.mv.uci())));
}

/// Raw frequencies of the moves played at `pos`.
pub fn query_transitions(
    index: &CorpusIndex,
    pos: &Position,
    min_games: u64,
) -> Result<TransitionDistribution, CorpusError> {
    query_transitions_smoothed(index, pos, min_games, 0.0)
}

/// As [`query_transitions`], adding `alpha` pseudo-counts to every legal
/// move when `alpha > 0`. The threshold applies to real games.
pub fn query_transitions_smoothed(
    index: &CorpusIndex,
    pos: &Position,
    min_games: u64,
    alpha: f64,
) -> Result<TransitionDistribution, CorpusError> {
    let counts = index.counts(pos);
    let total: u64 = counts.iter().map(|(_, n)| n).sum();
    if total < min_games.max(1) {
        return Err(CorpusError::InsufficientData {
            found: total,
            required: min_games.max(1),
        });
    }
    let mut entries: Vec<TransitionEntry> = if alpha > 0.0 {
        let legal = pos.legal_moves();
        let denom = total as f64 + alpha * legal.len() as f64;
        legal
            .into_iter()
            .map(|m| {
                let count = counts.iter().find(|(c, _)| *c == m).map_or(0, |(_, n)| *n);
                TransitionEntry {
                    mv: m,
                    count,
                    probability: (count as f64 + alpha) / denom,
                }
            })
            .collect()
    } else {
        counts
            .into_iter()
            .map(|(mv, count)| TransitionEntry {
                mv,
                count,
                probability: count as f64 / total as f64,
            })
            .collect()
    };
    sort_entries(&mut entries);
    let mut provenance = format!("corpus '{}', max ply {}, min games {min_games}", index.id, index.max_ply);
    if alpha > 0.0 {
        provenance.push_str(&format!(", smoothing {alpha}"));
    }
    Ok(TransitionDistribution {
        branch: pos.key(),
        total,
        entries,
        provenance,
    })
}

/// Restricts `d` to `moves` (in that order) and rescales to sum to one.
/// Moves outside the support get probability zero.
pub fn restrict_and_renormalize(
    d: &TransitionDistribution,
    moves: &[Move],
) -> Result<TransitionDistribution, CorpusError> {
    let picked: Vec<TransitionEntry> = moves
        .iter()
        .map(|m| TransitionEntry {
            mv: *m,
            count: d.count(m),
            probability: d.probability(m),
        })
        .collect();
    let mass: f64 = picked.iter().map(|e| e.probability).sum();
    if mass <= 0.0 {
        return Err(CorpusError::EmptySupport);
    }
    let entries = picked
        .into_iter()
        .map(|e| TransitionEntry {
            probability: e.probability / mass,
            ..e
        })
        .collect::<Vec<_>>();
    Ok(TransitionDistribution {
        branch: d.branch,
        total: entries.iter().map(|e| e.count).sum(),
        entries,
        provenance: format!("{}, restricted to {} moves", d.provenance, moves.len()),
    })
}
