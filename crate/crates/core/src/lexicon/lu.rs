use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LexiconError;

/// One member of a derivational family: `détruire` -> verb `détruire`,
/// noun `destruction`...
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub name: String,
    pub lemma: String,
    pub category: String,
    pub paradigm: String,
    /// Extra decoration carried by this form, e.g. `GNR=FEM`.
    pub features: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalUnit {
    pub lu: String,
    pub derivations: Vec<Derivation>,
}

impl LexicalUnit {
    pub fn derivation(&self, name: &str) -> Option<&Derivation> {
        self.derivations.iter().find(|d| d.name.eq_ignore_ascii_case(name))
    }

    /// Derivation for a category, falling back to the first one.
    pub fn for_category(&self, category: &str) -> &Derivation {
        self.derivations
            .iter()
            .find(|d| d.category == category)
            .unwrap_or(&self.derivations[0])
    }
}

/// Derivation tables keyed by LU.
///
/// TSV columns: `lu<TAB>derivation<TAB>lemma<TAB>category<TAB>paradigm[<TAB>features]`
/// where features is a comma list of `VAR=VALUE`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LuTable {
    units: BTreeMap<String, LexicalUnit>,
}

impl LuTable {
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut table = LuTable::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if !(5..=6).contains(&cols.len()) || cols[..5].iter().any(|c| c.is_empty()) {
                return Err(LexiconError::Format {
                    line,
                    message: "expected `lu derivation lemma category paradigm [features]`".into(),
                });
            }
            let mut features = Vec::new();
            if let Some(f) = cols.get(5).filter(|f| !f.is_empty() && **f != "-") {
                for pair in f.split(',') {
                    let (k, v) = pair.split_once('=').ok_or_else(|| LexiconError::Format {
                        line,
                        message: format!("bad feature `{pair}`"),
                    })?;
                    features.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
            let unit = table
                .units
                .entry(cols[0].to_string())
                .or_insert_with(|| LexicalUnit {
                    lu: cols[0].to_string(),
                    derivations: Vec::new(),
                });
            if unit.derivation(cols[1]).is_some() {
                return Err(LexiconError::Format {
                    line,
                    message: format!("derivation `{}` of `{}` declared twice", cols[1], cols[0]),
                });
            }
            unit.derivations.push(Derivation {
                name: cols[1].to_string(),
                lemma: cols[2].to_string(),
                category: cols[3].to_string(),
                paradigm: cols[4].to_string(),
                features,
            });
        }
        Ok(table)
    }

    pub fn get(&self, lu: &str) -> Option<&LexicalUnit> {
        self.units.get(lu)
    }

    pub fn units(&self) -> impl Iterator<Item = &LexicalUnit> {
        self.units.values()
    }
}
