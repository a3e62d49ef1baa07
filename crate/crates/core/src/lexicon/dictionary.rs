use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::counts::AssocCounts;
use super::lu::{LexicalUnit, LuTable};
use super::profile::Profile;
use super::LexiconError;
use crate::unl::Uw;

/// One `uw -> lu` line of a target-language dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexEntry {
    pub uw: Uw,
    pub lu: String,
    /// Category of the derivational family head (N, V, A...).
    pub pos: String,
    pub domain: Option<String>,
    pub base_weight: f64,
    pub dictionary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub entry: LexEntry,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    pub id: String,
    pub entries: Vec<LexEntry>,
}

impl Dictionary {
    /// Parse the TSV format `uw<TAB>lu<TAB>pos<TAB>domain<TAB>weight`.
    /// `-` or an empty cell means no domain; `#` starts a comment line.
    pub fn parse(id: &str, text: &str) -> Result<Self, LexiconError> {
        let mut dict = Dictionary {
            id: id.to_string(),
            entries: Vec::new(),
        };
        let mut seen: HashMap<(String, String), usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(LexiconError::Format {
                    line,
                    message: format!("expected 5 tab-separated columns, found {}", cols.len()),
                });
            }
            let uw = Uw::parse(cols[0]).map_err(|e| LexiconError::Format {
                line,
                message: e.to_string(),
            })?;
            let lu = cols[1].to_string();
            if lu.is_empty() || cols[2].is_empty() {
                return Err(LexiconError::Format {
                    line,
                    message: "empty lu or pos column".into(),
                });
            }
            let base_weight: f64 = cols[4].parse().map_err(|_| LexiconError::Format {
                line,
                message: format!("bad weight `{}`", cols[4]),
            })?;
            if !(base_weight >= 0.0 && base_weight.is_finite()) {
                return Err(LexiconError::Format {
                    line,
                    message: format!("weight must be a non-negative number, got `{}`", cols[4]),
                });
            }
            let key = (uw.to_string(), lu.clone());
            if let Some(first) = seen.insert(key, line) {
                return Err(LexiconError::DuplicateEntry {
                    line,
                    first,
                    uw: uw.to_string(),
                    lu,
                });
            }
            let domain = match cols[3] {
                "" | "-" => None,
                d => Some(d.to_string()),
            };
            dict.entries.push(LexEntry {
                uw,
                lu,
                pos: cols[2].to_string(),
                domain,
                base_weight,
                dictionary: id.to_string(),
            });
        }
        Ok(dict)
    }
}

/// The target dictionary set `D` plus derivation tables.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    dictionaries: Vec<Dictionary>,
    /// UW text -> (dictionary index, entry index), in load order.
    by_uw: HashMap<String, Vec<(usize, usize)>>,
    /// Distinct UWs in load order.
    uws: Vec<Uw>,
    pub lus: LuTable,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load a dictionary file; its id is the file stem.
    pub fn load_dictionary(&mut self, path: &Path) -> Result<String, LexiconError> {
        let text = std::fs::read_to_string(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dict".into());
        let dict = Dictionary::parse(&id, &text)?;
        self.add_dictionary(dict);
        Ok(id)
    }

    pub fn add_dictionary(&mut self, dict: Dictionary) {
        let d = self.dictionaries.len();
        for (e, entry) in dict.entries.iter().enumerate() {
            let key = entry.uw.to_string();
            let slot = self.by_uw.entry(key).or_default();
            if slot.is_empty() {
                self.uws.push(entry.uw.clone());
            }
            slot.push((d, e));
        }
        self.dictionaries.push(dict);
    }

    pub fn dictionaries(&self) -> &[Dictionary] {
        &self.dictionaries
    }

    pub fn contains(&self, uw: &Uw) -> bool {
        self.by_uw.contains_key(&uw.to_string())
    }

    /// Every distinct UW of `D`.
    pub fn uws(&self) -> &[Uw] {
        &self.uws
    }

    pub fn is_empty(&self) -> bool {
        self.uws.is_empty()
    }

    pub fn entries_for(&self, uw: &Uw) -> impl Iterator<Item = &LexEntry> {
        self.by_uw
            .get(&uw.to_string())
            .into_iter()
            .flatten()
            .map(|&(d, e)| &self.dictionaries[d].entries[e])
    }

    pub fn lexical_unit(&self, lu: &str) -> Option<&LexicalUnit> {
        self.lus.get(lu)
    }

    /// All candidate entries for a UW of `D`, best first.
    ///
    /// score = base weight + domain boost + association count. Ties keep
    /// dictionary priority order (profile order, then load order) and line
    /// order within a dictionary.
    pub fn lookup_lus(&self, uw: &Uw, profile: &Profile, counts: &AssocCounts) -> Result<Vec<ScoredEntry>, LexiconError> {
        let slots = self
            .by_uw
            .get(&uw.to_string())
            .ok_or_else(|| LexiconError::NotInDictionary(uw.to_string()))?;
        let rank = |d: usize| {
            let id = &self.dictionaries[d].id;
            profile
                .dictionary_priorities
                .iter()
                .position(|p| p == id)
                .unwrap_or(profile.dictionary_priorities.len() + d)
        };
        let mut ordered = slots.clone();
        ordered.sort_by_key(|&(d, e)| (rank(d), e));
        let mut out: Vec<ScoredEntry> = ordered
            .into_iter()
            .map(|(d, e)| {
                let entry = &self.dictionaries[d].entries[e];
                let boost = entry
                    .domain
                    .as_ref()
                    .and_then(|dom| profile.domain_boosts.get(dom))
                    .copied()
                    .unwrap_or(0.0);
                let count = counts.uw2lu(&entry.uw.to_string(), &entry.lu) as f64;
                ScoredEntry {
                    entry: entry.clone(),
                    score: entry.base_weight + boost + count,
                }
            })
            .collect();
        // stable: equal scores keep priority order
        out.sort_by(|a, b| b.score.total_cmp(&a.score));
        Ok(out)
    }

    pub fn attach_lus(&mut self, table: LuTable) {
        self.lus = table;
    }
}
