//! Relation and attribute inventories.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("inventory line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("reading inventory: {0}")]
    Io(#[from] std::io::Error),
}

/// Declared relation labels, attribute names and attribute classes.
///
/// The file has one name per line under `[relations]`, `[attributes]` and
/// `[reflexive]` sections; `[attribute-classes]` holds `class = v1 v2 ...`
/// lines grouping mutually exclusive attributes (number, tense...).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inventory {
    pub relations: BTreeSet<String>,
    pub attributes: BTreeSet<String>,
    /// Relations allowed on self-loops.
    pub reflexive: BTreeSet<String>,
    pub classes: BTreeMap<String, Vec<String>>,
}

impl Inventory {
    pub fn load(path: &Path) -> Result<Self, InventoryError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, InventoryError> {
        let mut inv = Inventory::default();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                let name = line.trim_start_matches('[').trim_end_matches(']').trim();
                match name {
                    "relations" | "attributes" | "reflexive" | "attribute-classes" => {
                        section = Some(name.to_string())
                    }
                    _ => {
                        return Err(InventoryError::Syntax {
                            line: line_no,
                            message: format!("unknown section `{name}`"),
                        })
                    }
                }
                continue;
            }
            let syntax = |message: String| InventoryError::Syntax {
                line: line_no,
                message,
            };
            match section.as_deref() {
                None => return Err(syntax("entry outside of any section".into())),
                Some("attribute-classes") => {
                    let (class, values) = line
                        .split_once('=')
                        .ok_or_else(|| syntax(format!("expected `class = values`, got `{line}`")))?;
                    let values: Vec<String> =
                        values.split_whitespace().map(str::to_string).collect();
                    if values.is_empty() {
                        return Err(syntax(format!("class `{}` has no values", class.trim())));
                    }
                    inv.classes.insert(class.trim().to_string(), values);
                }
                Some(sec) => {
                    if line.contains(char::is_whitespace) {
                        return Err(syntax(format!("expected a single name, got `{line}`")));
                    }
                    let set = match sec {
                        "relations" => &mut inv.relations,
                        "attributes" => &mut inv.attributes,
                        _ => &mut inv.reflexive,
                    };
                    set.insert(line.to_string());
                }
            }
        }
        for values in inv.classes.values() {
            for v in values {
                inv.attributes.insert(v.clone());
            }
        }
        Ok(inv)
    }

    pub fn has_relation(&self, r: &str) -> bool {
        self.relations.contains(r)
    }

    pub fn has_attribute(&self, a: &str) -> bool {
        self.attributes.contains(a)
    }

    /// Class an attribute value belongs to, if any.
    pub fn class_of(&self, attr: &str) -> Option<&str> {
        self.classes
            .iter()
            .find(|(_, vs)| vs.iter().any(|v| v == attr))
            .map(|(c, _)| c.as_str())
    }
}
