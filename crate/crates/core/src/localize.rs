//! Lexical and cultural localization.
//!
//! Lexical localization replaces every UW of the graph by the nearest UW of
//! the target dictionary under a configurable pseudo-distance. Cultural
//! localization fills attributes the source left out (number, tense...)
//! from the active profile.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{AssocCounts, LexiconError, Lexicon, Profile, ScoredEntry};
use crate::seeded;
use crate::unl::{AttrOrigin, Direction, Inventory, NodeId, UnlGraph, Uw, Vertex};

const EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LocalizeError {
    #[error("the target dictionary is empty")]
    EmptyDictionary,
    #[error("chooser returned index {index} for node {node} with {len} candidates")]
    BadChoice { node: NodeId, index: usize, len: usize },
}

/// Costs of the pseudo-distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoDistance {
    pub headword_mismatch: f64,
    /// Per restriction present on one side only.
    pub restriction_asymmetry: f64,
    /// Per candidate restriction contradicted by the node's actual arcs.
    pub context_conflict: f64,
}

impl Default for PseudoDistance {
    fn default() -> Self {
        PseudoDistance {
            headword_mismatch: 10.0,
            restriction_asymmetry: 1.0,
            context_conflict: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizeParams {
    /// UWs farther than this from every dictionary UW stay unlocalized.
    pub max_distance: Option<f64>,
    /// Widened search keeps dictionary UWs within `min + widen_margin`.
    pub widen_margin: f64,
    /// Candidates kept in a choice record (the whole tie set is always kept).
    pub max_candidates: usize,
}

impl Default for LocalizeParams {
    fn default() -> Self {
        LocalizeParams {
            max_distance: None,
            widen_margin: 2.0,
            max_candidates: 10,
        }
    }
}

/// Pairs of classes that cannot fill the same relation slot.
///
/// TSV columns `relation<TAB>class-a<TAB>class-b`, read symmetrically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incompatibilities {
    pairs: BTreeSet<(String, String, String)>,
}

impl Incompatibilities {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut out = Incompatibilities::default();
        for (idx, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(LexiconError::Format {
                    line: idx + 1,
                    message: "expected `relation class-a class-b`".into(),
                });
            }
            out.insert(cols[0], cols[1], cols[2]);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, relation: &str, a: &str, b: &str) {
        self.pairs.insert((relation.into(), a.into(), b.into()));
        self.pairs.insert((relation.into(), b.into(), a.into()));
    }

    pub fn conflicts(&self, relation: &str, a: &str, b: &str) -> bool {
        self.pairs
            .contains(&(relation.to_string(), a.to_string(), b.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// The graph position a UW is being compared in.
#[derive(Debug, Clone, Copy)]
pub struct Context<'a> {
    pub graph: &'a UnlGraph,
    pub node: NodeId,
    pub incompat: &'a Incompatibilities,
}

impl Context<'_> {
    /// Candidate restrictions `rel>class` whose class clashes with the
    /// class of what the node's outgoing `rel` arc actually points to.
    fn conflicts(&self, x: &Uw) -> usize {
        if self.incompat.is_empty() {
            return 0;
        }
        let me = Vertex::Node(self.node);
        x.restrictions
            .iter()
            .filter(|r| r.direction == Direction::Forward && r.relation != "icl")
            .filter(|r| {
                self.graph
                    .arcs
                    .iter()
                    .filter(|a| a.source == me && a.label == r.relation)
                    .filter_map(|a| a.target.node().and_then(|t| self.graph.node(t)))
                    .any(|t| {
                        t.uw.classes()
                            .chain(std::iter::once(t.uw.headword.as_str()))
                            .any(|c| self.incompat.conflicts(&r.relation, &r.target, c))
                    })
            })
            .count()
    }
}

/// d(w, x, G).
///
/// Identical UWs are at distance 0 whatever the context.
pub fn distance(w: &Uw, x: &Uw, ctx: Option<&Context<'_>>, params: &PseudoDistance) -> f64 {
    if w == x {
        return 0.0;
    }
    let hw = if w.headword == x.headword { 0.0 } else { params.headword_mismatch };
    let only_w = w.restrictions.iter().filter(|r| !x.has_restriction(r)).count();
    let only_x = x.restrictions.iter().filter(|r| !w.has_restriction(r)).count();
    let asym = (only_w + only_x) as f64 * params.restriction_asymmetry;
    let ctx_cost = ctx.map_or(0, |c| c.conflicts(x)) as f64 * params.context_conflict;
    hw + asym + ctx_cost
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChoiceMode {
    Automatic,
    Interactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub uw: Uw,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationChoice {
    pub node: NodeId,
    pub original: Uw,
    /// Nearest dictionary UWs, ascending distance.
    pub candidates: Vec<Candidate>,
    /// `None` when nothing lies within the profile's maximum distance.
    pub chosen: Option<Uw>,
    pub mode: ChoiceMode,
}

/// Interactive decision callback used during localization and transfer.
///
/// Returning `None` lets the engine decide automatically.
pub trait Chooser {
    fn choose_uw(&mut self, _node: NodeId, _original: &Uw, _candidates: &[Candidate]) -> Option<usize> {
        None
    }

    fn choose_lu(&mut self, _node: NodeId, _uw: &Uw, _candidates: &[ScoredEntry]) -> Option<usize> {
        None
    }
}

/// Every dictionary UW with its distance to `w`, ascending (ties in
/// dictionary order).
pub fn rank_dictionary(w: &Uw, lexicon: &Lexicon, ctx: Option<&Context<'_>>, params: &PseudoDistance) -> Vec<Candidate> {
    let mut all: Vec<Candidate> = lexicon
        .uws()
        .iter()
        .map(|x| Candidate {
            uw: x.clone(),
            distance: distance(w, x, ctx, params),
        })
        .collect();
    all.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    all
}

/// Dictionary UWs within `widen_margin` of the best one.
pub fn widen(w: &Uw, lexicon: &Lexicon, ctx: Option<&Context<'_>>, profile: &Profile) -> Vec<Candidate> {
    let ranked = rank_dictionary(w, lexicon, ctx, &profile.distance);
    let Some(best) = ranked.first().map(|c| c.distance) else {
        return Vec::new();
    };
    ranked
        .into_iter()
        .take_while(|c| c.distance <= best + profile.localize.widen_margin + EPS)
        .collect()
}

fn localize_node(
    graph: &UnlGraph,
    node: NodeId,
    lexicon: &Lexicon,
    incompat: &Incompatibilities,
    profile: &Profile,
    counts: &AssocCounts,
    seed: u64,
) -> LocalizationChoice {
    let original = graph.node(node).expect("node id from graph").uw.clone();
    if lexicon.contains(&original) {
        return LocalizationChoice {
            node,
            candidates: vec![Candidate {
                uw: original.clone(),
                distance: 0.0,
            }],
            chosen: Some(original.clone()),
            original,
            mode: ChoiceMode::Automatic,
        };
    }
    let ctx = Context { graph, node, incompat };
    let mut ranked = rank_dictionary(&original, lexicon, Some(&ctx), &profile.distance);
    let best = ranked[0].distance;
    let ties = ranked.iter().take_while(|c| c.distance <= best + EPS).count();
    ranked.truncate(ties.max(profile.localize.max_candidates));

    let within = profile.localize.max_distance.is_none_or(|m| best <= m + EPS);
    let chosen = within.then(|| {
        // learned (source, target) associations outrank chance
        let orig_text = original.to_string();
        let learned: Vec<u64> = ranked[..ties]
            .iter()
            .map(|c| counts.uw2uw(&orig_text, &c.uw.to_string()))
            .collect();
        let top = learned.iter().copied().max().unwrap_or(0);
        let preferred: Vec<usize> = (0..ties).filter(|&i| learned[i] == top).collect();
        let k = seeded::pick(seed, seeded::STAGE_LOCALIZE, node, preferred.len());
        ranked[preferred[k]].uw.clone()
    });
    LocalizationChoice {
        node,
        original,
        candidates: ranked,
        chosen,
        mode: ChoiceMode::Automatic,
    }
}

/// Substitute every node's UW by a nearest dictionary UW.
///
/// Nodes already in the dictionary are left alone. Among equally distant
/// candidates, the one most often chosen by posteditors for this source UW
/// wins; remaining ties are broken by a seeded uniform draw.
pub fn localize_lexically(
    graph: &UnlGraph,
    lexicon: &Lexicon,
    incompat: &Incompatibilities,
    profile: &Profile,
    counts: &AssocCounts,
    seed: u64,
    mut chooser: Option<&mut dyn Chooser>,
) -> Result<(UnlGraph, Vec<LocalizationChoice>), LocalizeError> {
    if lexicon.is_empty() {
        return Err(LocalizeError::EmptyDictionary);
    }
    let ids: Vec<NodeId> = graph.node_ids().collect();
    let mut choices: Vec<LocalizationChoice> = crate::par::map(&ids, |&n| {
        localize_node(graph, n, lexicon, incompat, profile, counts, seed)
    });
    if let Some(ch) = chooser.as_deref_mut() {
        for c in choices.iter_mut() {
            if c.candidates.len() == 1 && c.chosen.as_ref() == Some(&c.original) {
                continue;
            }
            if let Some(index) = ch.choose_uw(c.node, &c.original, &c.candidates) {
                let picked = c.candidates.get(index).ok_or(LocalizeError::BadChoice {
                    node: c.node,
                    index,
                    len: c.candidates.len(),
                })?;
                c.chosen = Some(picked.uw.clone());
                c.mode = ChoiceMode::Interactive;
            }
        }
    }
    let mut out = graph.clone();
    for c in &choices {
        if let Some(uw) = &c.chosen {
            out.node_mut(c.node).expect("node id from graph").uw = uw.clone();
        }
    }
    Ok((out, choices))
}

/// Category of a localized node: the part of speech of its first dictionary
/// entry, `N` for unknown UWs.
pub fn node_category<'a>(lexicon: &'a Lexicon, uw: &Uw) -> &'a str {
    lexicon.entries_for(uw).next().map_or("N", |e| e.pos.as_str())
}

/// Add profile defaults for attribute classes a node leaves unspecified.
pub fn localize_culturally(graph: &UnlGraph, lexicon: &Lexicon, profile: &Profile, inventory: &Inventory) -> UnlGraph {
    let mut out = graph.clone();
    for node in out.nodes.iter_mut() {
        let cat = node_category(lexicon, &node.uw).to_string();
        for ((dcat, class), value) in &profile.attribute_defaults {
            if *dcat != cat {
                continue;
            }
            let specified = node
                .attributes
                .keys()
                .any(|a| inventory.class_of(a) == Some(class.as_str()));
            if !specified {
                node.attributes.entry(value.clone()).or_insert(AttrOrigin::Defaulted);
            }
        }
    }
    out
}
