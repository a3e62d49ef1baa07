//! Lexical transfer on the graph.
//!
//! Each node is mapped to exactly one target lexical unit before the graph
//! is turned into a tree, so the copies graph-to-tree makes of a shared node
//! cannot end up with different words.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{AssocCounts, LexEntry, LexiconError, Lexicon, Profile};
use crate::localize::{ChoiceMode, Chooser};
use crate::seeded;
use crate::unl::{AttrOrigin, NodeId, Restriction, UnlGraph, Uw};

const EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("node {node}: UW `{uw}` is not in the dictionary")]
    NotInDictionary { node: NodeId, uw: String },
    #[error("node {node}: `{lu}` is not a candidate lexical unit for `{uw}`")]
    LuNotCandidate { node: NodeId, uw: String, lu: String },
    #[error("node {node}: chooser returned index {index} of {len}")]
    BadChoice { node: NodeId, index: usize, len: usize },
}

/// Restriction-driven transfer variables, e.g. `icl>action -> PREDIC=ACTION`.
///
/// TSV columns `restriction<TAB>VAR=VAL[,VAR=VAL...]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionVars {
    rules: Vec<(Restriction, Vec<(String, String)>)>,
}

impl RestrictionVars {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut out = RestrictionVars::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let bad = |m: &str| LexiconError::Format {
                line,
                message: m.to_string(),
            };
            let (r, vars) = raw.split_once('\t').ok_or_else(|| bad("expected `restriction<TAB>VAR=VAL,...`"))?;
            let probe = Uw::parse(&format!("x({})", r.trim())).map_err(|e| bad(&e.to_string()))?;
            let [restriction] = probe.restrictions.as_slice() else {
                return Err(bad("expected exactly one restriction"));
            };
            let mut assigns = Vec::new();
            for pair in vars.split(',') {
                let (k, v) = pair.split_once('=').ok_or_else(|| bad("expected VAR=VAL"))?;
                assigns.push((k.trim().to_string(), v.trim().to_string()));
            }
            out.rules.push((restriction.clone(), assigns));
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Variables implied by a UW's restrictions, first assignment wins.
    pub fn vars_for(&self, uw: &Uw) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for (r, assigns) in &self.rules {
            if uw.has_restriction(r) {
                for (k, v) in assigns {
                    if !out.iter().any(|(ok, _)| ok == k) {
                        out.push((k.clone(), v.clone()));
                    }
                }
            }
        }
        out
    }

    /// Every variable/value pair the table can produce.
    pub fn all_assignments(&self) -> impl Iterator<Item = &(String, String)> {
        self.rules.iter().flat_map(|(_, a)| a.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferredNode {
    pub node: NodeId,
    pub uw: Uw,
    /// `None` for an untranslated node.
    pub lu: Option<String>,
    pub category: String,
    pub vars: Vec<(String, String)>,
    pub attributes: BTreeMap<String, AttrOrigin>,
    pub entry: Option<LexEntry>,
}

impl TransferredNode {
    pub fn untranslated(&self) -> bool {
        self.lu.is_none()
    }
}

/// The localized graph with one transferred payload per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferredGraph {
    pub graph: UnlGraph,
    /// Indexed by `NodeId.0 - 1`.
    pub nodes: Vec<TransferredNode>,
}

impl TransferredGraph {
    pub fn node(&self, id: NodeId) -> Option<&TransferredNode> {
        (id.0 as usize).checked_sub(1).and_then(|i| self.nodes.get(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuCandidate {
    pub lu: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferChoice {
    pub node: NodeId,
    pub uw: Uw,
    pub candidates: Vec<LuCandidate>,
    pub chosen: Option<String>,
    pub mode: ChoiceMode,
}

/// What to do with a node whose UW has no dictionary entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissingPolicy {
    Fail,
    /// Keep the headword as an untranslated token.
    Untranslated,
}

pub struct TransferInput<'a> {
    pub lexicon: &'a Lexicon,
    pub restriction_vars: &'a RestrictionVars,
    pub profile: &'a Profile,
    pub counts: &'a AssocCounts,
    pub seed: u64,
    /// Posteditor choices, applied instead of automatic selection.
    pub overrides: &'a BTreeMap<NodeId, String>,
    pub missing: MissingPolicy,
}

/// Map every node to one lexical unit.
///
/// Automatic selection takes the best score; exact ties are broken by a
/// seeded uniform draw.
pub fn transfer_lexically(
    graph: &UnlGraph,
    input: &TransferInput<'_>,
    mut chooser: Option<&mut dyn Chooser>,
) -> Result<(TransferredGraph, Vec<TransferChoice>), TransferError> {
    let mut nodes = Vec::with_capacity(graph.nodes.len());
    let mut choices = Vec::with_capacity(graph.nodes.len());
    for n in &graph.nodes {
        let vars = input.restriction_vars.vars_for(&n.uw);
        let scored = match input.lexicon.lookup_lus(&n.uw, input.profile, input.counts) {
            Ok(s) => s,
            Err(_) if input.missing == MissingPolicy::Untranslated => {
                choices.push(TransferChoice {
                    node: n.id,
                    uw: n.uw.clone(),
                    candidates: Vec::new(),
                    chosen: None,
                    mode: ChoiceMode::Automatic,
                });
                nodes.push(TransferredNode {
                    node: n.id,
                    uw: n.uw.clone(),
                    lu: None,
                    category: "N".into(),
                    vars,
                    attributes: n.attributes.clone(),
                    entry: None,
                });
                continue;
            }
            Err(_) => {
                return Err(TransferError::NotInDictionary {
                    node: n.id,
                    uw: n.uw.to_string(),
                })
            }
        };
        let mut mode = ChoiceMode::Automatic;
        let index = if let Some(lu) = input.overrides.get(&n.id) {
            mode = ChoiceMode::Interactive;
            scored
                .iter()
                .position(|s| &s.entry.lu == lu)
                .ok_or_else(|| TransferError::LuNotCandidate {
                    node: n.id,
                    uw: n.uw.to_string(),
                    lu: lu.clone(),
                })?
        } else if let Some(i) = chooser
            .as_deref_mut()
            .filter(|_| scored.len() > 1)
            .and_then(|c| c.choose_lu(n.id, &n.uw, &scored))
        {
            if i >= scored.len() {
                return Err(TransferError::BadChoice {
                    node: n.id,
                    index: i,
                    len: scored.len(),
                });
            }
            mode = ChoiceMode::Interactive;
            i
        } else {
            let best = scored[0].score;
            let ties = scored.iter().take_while(|s| s.score >= best - EPS).count();
            seeded::pick(input.seed, seeded::STAGE_TRANSFER, n.id, ties)
        };
        let entry = scored[index].entry.clone();
        choices.push(TransferChoice {
            node: n.id,
            uw: n.uw.clone(),
            candidates: scored
                .iter()
                .map(|s| LuCandidate {
                    lu: s.entry.lu.clone(),
                    score: s.score,
                })
                .collect(),
            chosen: Some(entry.lu.clone()),
            mode,
        });
        nodes.push(TransferredNode {
            node: n.id,
            uw: n.uw.clone(),
            lu: Some(entry.lu.clone()),
            category: entry.pos.clone(),
            vars,
            attributes: n.attributes.clone(),
            entry: Some(entry),
        });
    }
    Ok((
        TransferredGraph {
            graph: graph.clone(),
            nodes,
        },
        choices,
    ))
}

/// One JSON object per line.
pub fn choices_to_json_lines<T: Serialize>(choices: &[T]) -> String {
    choices
        .iter()
        .map(|c| serde_json::to_string(c).expect("choice records serialize") + "\n")
        .collect()
}
