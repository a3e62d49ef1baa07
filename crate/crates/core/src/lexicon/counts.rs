//! Association counts: the learning channel.
//!
//! The store file is a log of tab-separated lines. `=` lines set a count,
//! `+` lines add one:
//!
//! ```text
//! =	uw2lu	chair(icl>furniture)	fauteuil	3
//! +	uw2lu	chair(icl>furniture)	chaise
//! ```
//!
//! Every increment is appended and synced before it is acknowledged, so a
//! crash loses at most the increment in flight. [`CountStore::save`] compacts
//! the log into `=` lines.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use super::LexiconError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    /// (source UW, target-dictionary UW)
    Uw2Uw,
    /// (target-dictionary UW, LU)
    Uw2Lu,
}

impl PairKind {
    fn tag(self) -> &'static str {
        match self {
            PairKind::Uw2Uw => "uw2uw",
            PairKind::Uw2Lu => "uw2lu",
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        match s {
            "uw2uw" => Some(PairKind::Uw2Uw),
            "uw2lu" => Some(PairKind::Uw2Lu),
            _ => None,
        }
    }
}

type PairMap = BTreeMap<(String, String), u64>;

/// A snapshot of association counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssocCounts {
    #[serde(with = "pair_map")]
    pub uw2uw: PairMap,
    #[serde(with = "pair_map")]
    pub uw2lu: PairMap,
}

impl AssocCounts {
    fn map(&self, kind: PairKind) -> &PairMap {
        match kind {
            PairKind::Uw2Uw => &self.uw2uw,
            PairKind::Uw2Lu => &self.uw2lu,
        }
    }

    fn map_mut(&mut self, kind: PairKind) -> &mut PairMap {
        match kind {
            PairKind::Uw2Uw => &mut self.uw2uw,
            PairKind::Uw2Lu => &mut self.uw2lu,
        }
    }

    pub fn get(&self, kind: PairKind, a: &str, b: &str) -> u64 {
        self.map(kind)
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn uw2lu(&self, uw: &str, lu: &str) -> u64 {
        self.get(PairKind::Uw2Lu, uw, lu)
    }

    pub fn uw2uw(&self, source: &str, target: &str) -> u64 {
        self.get(PairKind::Uw2Uw, source, target)
    }

    /// In-memory increment, returns the new count.
    pub fn bump(&mut self, kind: PairKind, a: &str, b: &str) -> u64 {
        let c = self.map_mut(kind).entry((a.to_string(), b.to_string())).or_insert(0);
        *c += 1;
        *c
    }

    fn parse_log(text: &str) -> Result<Self, LexiconError> {
        let mut counts = AssocCounts::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            let bad = || LexiconError::Format {
                line,
                message: format!("bad counts line `{raw}`"),
            };
            let kind = cols.get(1).and_then(|t| PairKind::from_tag(t)).ok_or_else(bad)?;
            match (cols[0], cols.len()) {
                ("+", 4) => {
                    counts.bump(kind, cols[2], cols[3]);
                }
                ("=", 5) => {
                    let n: u64 = cols[4].parse().map_err(|_| bad())?;
                    counts.map_mut(kind).insert((cols[2].to_string(), cols[3].to_string()), n);
                }
                _ => return Err(bad()),
            }
        }
        Ok(counts)
    }

    fn to_compact(&self) -> String {
        let mut out = String::new();
        for kind in [PairKind::Uw2Uw, PairKind::Uw2Lu] {
            for ((a, b), n) in self.map(kind) {
                out.push_str(&format!("=\t{}\t{a}\t{b}\t{n}\n", kind.tag()));
            }
        }
        out
    }
}

mod pair_map {
    use super::PairMap;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &PairMap, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(&String, &String, u64)> = map.iter().map(|((a, b), n)| (a, b, *n)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PairMap, D::Error> {
        let v: Vec<(String, String, u64)> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|(a, b, n)| ((a, b), n)).collect())
    }
}

#[derive(Debug)]
struct Inner {
    counts: AssocCounts,
    log: Option<(PathBuf, File)>,
}

/// Single-writer count store shared by every session of one profile.
///
/// Readers take a [`snapshot`](CountStore::snapshot); increments are
/// serialized by an internal lock.
#[derive(Debug)]
pub struct CountStore {
    inner: Mutex<Inner>,
}

impl Default for CountStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl CountStore {
    pub fn in_memory() -> Self {
        CountStore {
            inner: Mutex::new(Inner {
                counts: AssocCounts::default(),
                log: None,
            }),
        }
    }

    pub fn from_counts(counts: AssocCounts) -> Self {
        CountStore {
            inner: Mutex::new(Inner { counts, log: None }),
        }
    }

    /// Open (or create) a persistent store, replaying its log.
    pub fn open(path: &Path) -> Result<Self, LexiconError> {
        let counts = match std::fs::read_to_string(path) {
            Ok(text) => AssocCounts::parse_log(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => AssocCounts::default(),
            Err(e) => return Err(e.into()),
        };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(CountStore {
            inner: Mutex::new(Inner {
                counts,
                log: Some((path.to_path_buf(), file)),
            }),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        // a poisoned lock still holds consistent counts: each mutation is one insert
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn snapshot(&self) -> AssocCounts {
        self.lock().counts.clone()
    }

    /// Add one to a pair's count; durable before returning when persistent.
    pub fn increment(&self, kind: PairKind, a: &str, b: &str) -> Result<u64, LexiconError> {
        if a.contains(['\t', '\n']) || b.contains(['\t', '\n']) {
            return Err(LexiconError::Storage(format!("malformed count key `{a}`/`{b}`")));
        }
        let mut inner = self.lock();
        if let Some((_, file)) = inner.log.as_mut() {
            let line = format!("+\t{}\t{a}\t{b}\n", kind.tag());
            file.write_all(line.as_bytes())
                .and_then(|_| file.sync_data())
                .map_err(|e| LexiconError::Storage(e.to_string()))?;
        }
        Ok(inner.counts.bump(kind, a, b))
    }

    /// Write a compacted snapshot to `path` atomically. When `path` is this
    /// store's own log, the log is replaced and appending continues on it.
    pub fn save(&self, path: &Path) -> Result<(), LexiconError> {
        let mut inner = self.lock();
        let tmp = path.with_extension("tmp");
        {
            let mut f = File::create(&tmp)?;
            f.write_all(inner.counts.to_compact().as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        let own = inner.log.as_ref().is_some_and(|(p, _)| p == path);
        if own {
            let file = OpenOptions::new().append(true).open(path)?;
            inner.log = Some((path.to_path_buf(), file));
        }
        Ok(())
    }
}

/// Free-function form used by the pipeline.
pub fn increment(kind: PairKind, a: &str, b: &str, store: &CountStore) -> Result<u64, LexiconError> {
    store.increment(kind, a, b)
}

pub fn save_counts(store: &CountStore, path: &Path) -> Result<(), LexiconError> {
    store.save(path)
}

pub fn load_counts(path: &Path) -> Result<AssocCounts, LexiconError> {
    AssocCounts::parse_log(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn fresh_and_repeated_increment() {
        let s = CountStore::in_memory();
        assert_eq!(s.increment(PairKind::Uw2Lu, "chair", "chaise").unwrap(), 1);
        assert_eq!(s.increment(PairKind::Uw2Lu, "chair", "chaise").unwrap(), 2);
        assert_eq!(s.snapshot().uw2lu("chair", "chaise"), 2);
        assert_eq!(s.snapshot().uw2uw("chair", "chaise"), 0);
    }

    #[test]
    fn concurrent_increments_serialize() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.log");
        let store = Arc::new(CountStore::open(&path).unwrap());
        store.increment(PairKind::Uw2Lu, "u", "l").unwrap();
        let handles: Vec<_> = (0..2)
            .map(|_| {
                let s = Arc::clone(&store);
                std::thread::spawn(move || s.increment(PairKind::Uw2Lu, "u", "l").unwrap())
            })
            .collect();
        let mut seen: Vec<u64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        seen.sort();
        assert_eq!(seen, [2, 3]);
        assert_eq!(store.snapshot().uw2lu("u", "l"), 3);
        // the log replays to the same value
        assert_eq!(load_counts(&path).unwrap().uw2lu("u", "l"), 3);
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.log");
        let store = CountStore::open(&path).unwrap();
        store.increment(PairKind::Uw2Lu, "chair(icl>furniture)", "fauteuil").unwrap();
        store.increment(PairKind::Uw2Uw, "armchair(icl>furniture)", "chair(icl>furniture)").unwrap();
        store.increment(PairKind::Uw2Lu, "chair(icl>furniture)", "fauteuil").unwrap();
        store.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().all(|l| l.starts_with('=')), "{text}");
        store.increment(PairKind::Uw2Lu, "chair(icl>furniture)", "chaise").unwrap();
        let reopened = CountStore::open(&path).unwrap();
        assert_eq!(reopened.snapshot(), store.snapshot());
        assert_eq!(reopened.snapshot().uw2lu("chair(icl>furniture)", "fauteuil"), 2);
    }

    #[test]
    fn rejects_tab_in_key() {
        let s = CountStore::in_memory();
        assert!(s.increment(PairKind::Uw2Lu, "a\tb", "c").is_err());
    }

    #[test]
    fn bad_log_line_reports_line_number() {
        let err = AssocCounts::parse_log("=\tuw2lu\ta\tb\t1\n?\tx\n").unwrap_err();
        assert!(matches!(err, LexiconError::Format { line: 2, .. }));
    }
}
