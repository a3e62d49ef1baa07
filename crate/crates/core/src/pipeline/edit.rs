//! Posteditor edits, regeneration policies, global replacement and export.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Lingware, PipelineError, Stage, UtteranceState};
use crate::lexicon::{CountStore, PairKind};
use crate::localize::widen;
use crate::rewrite::{Schema, VarKind};
use crate::tree::{Tree, Value};
use crate::unl::{serialize_utterance, AttrOrigin, Inventory, NodeId, UnlNode, Utterance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrLevel {
    /// A UNL attribute on the graph node (`pl`, `past`, `not`...).
    Interlingual,
    /// A target-language variable set on the node's GMA copies.
    Style,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Edit {
    ChooseLu { node: NodeId, lu: String },
    SetAttribute { level: AttrLevel, node: NodeId, name: String, value: String },
}

/// When an edit triggers regeneration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "k", rename_all = "kebab-case")]
pub enum Policy {
    Always,
    /// After every k-th pending edit.
    EveryK(u32),
    /// Only on an explicit request.
    OnDemand,
}

impl Policy {
    fn due(self, pending: u32) -> bool {
        match self {
            Policy::Always => true,
            Policy::EveryK(k) => pending >= k.max(1),
            Policy::OnDemand => false,
        }
    }
}

/// Set an interlingual attribute with human origin. `name` is either an
/// attribute class, whose other members are removed, or a classless
/// attribute taking `yes` or `no`.
pub(super) fn apply_attribute(node: &mut UnlNode, inv: &Inventory, name: &str, value: &str) -> Result<(), PipelineError> {
    if let Some(members) = inv.classes.get(name) {
        if !members.iter().any(|m| m == value) {
            return Err(PipelineError::UnknownAttribute(format!("{name}={value}")));
        }
        for m in members {
            node.attributes.remove(m);
        }
        node.attributes.insert(value.to_string(), AttrOrigin::Human);
        return Ok(());
    }
    if name == "entry" || !inv.has_attribute(name) || inv.class_of(name).is_some() {
        return Err(PipelineError::UnknownAttribute(name.to_string()));
    }
    match value {
        "yes" => {
            node.attributes.insert(name.to_string(), AttrOrigin::Human);
        }
        "no" => {
            node.attributes.remove(name);
        }
        _ => return Err(PipelineError::UnknownAttribute(format!("{name}={value}"))),
    }
    Ok(())
}

/// Style value as stored on a tree: an empty string unsets, a
/// non-exclusive variable takes a comma list.
fn style_value(schema: &Schema, var: &str, value: &str) -> Result<Option<Value>, PipelineError> {
    if value.is_empty() {
        return Ok(None);
    }
    let v = match schema.kind(var) {
        Some(VarKind::NonExclusive(_)) => Value::Set(value.split(',').map(|s| s.trim().to_string()).collect()),
        _ => Value::Atom(value.to_string()),
    };
    schema
        .check_value(var, &v)
        .map_err(|m| PipelineError::UnknownAttribute(m))?;
    Ok(Some(v))
}

pub(super) fn apply_style(
    gma: &mut Tree,
    style: &BTreeMap<NodeId, BTreeMap<String, String>>,
    schema: &Schema,
) -> Result<(), PipelineError> {
    for (n, vars) in style {
        let mut values = Vec::new();
        for (var, value) in vars {
            values.push((var.as_str(), style_value(schema, var, value)?));
        }
        gma.for_each_mut(|t| {
            if t.unl == Some(*n) && t.deco.is("NODE", "LEX") {
                for (var, v) in &values {
                    t.deco.put(var, v.clone());
                }
            }
        });
    }
    Ok(())
}

/// Record an edit, invalidate what it touches and regenerate if the policy
/// says so. Returns whether regeneration ran.
pub fn edit_and_redeconvert(
    state: &mut UtteranceState,
    edit: Edit,
    policy: Policy,
    lw: &Lingware,
    counts: &CountStore,
) -> Result<bool, PipelineError> {
    let graph = &state.source.graph;
    match edit {
        Edit::ChooseLu { node, lu } => {
            let original = &graph.node(node).ok_or(PipelineError::UnknownNode(node.0))?.uw;
            let current = state.transfer_choices.iter().find(|c| c.node == node);
            if let Some(c) = current.filter(|c| c.candidates.iter().any(|x| x.lu == lu)) {
                counts.increment(PairKind::Uw2Lu, &c.uw.to_string(), &lu)?;
                state.edits.lu.insert(node, lu);
                state.invalidate(Stage::Transferred);
            } else {
                let profile = lw
                    .profile(&state.config.profile)
                    .ok_or_else(|| PipelineError::UnknownProfile(state.config.profile.clone()))?;
                let target = widen(original, &lw.lexicon, None, profile)
                    .into_iter()
                    .map(|c| c.uw)
                    .find(|uw| lw.lexicon.entries_for(uw).any(|e| e.lu == lu))
                    .ok_or_else(|| PipelineError::LuNotCandidate { node: node.0, lu: lu.clone() })?;
                if &target != original {
                    counts.increment(PairKind::Uw2Uw, &original.to_string(), &target.to_string())?;
                }
                counts.increment(PairKind::Uw2Lu, &target.to_string(), &lu)?;
                state.edits.uw.insert(node, target);
                state.edits.lu.insert(node, lu);
                state.invalidate(Stage::Localized);
            }
        }
        Edit::SetAttribute {
            level: AttrLevel::Interlingual,
            node,
            name,
            value,
        } => {
            let mut probe = graph.node(node).ok_or(PipelineError::UnknownNode(node.0))?.clone();
            apply_attribute(&mut probe, &lw.inventory, &name, &value)?;
            state.edits.attributes.entry(node).or_default().insert(name, value);
            state.invalidate(Stage::Localized);
        }
        Edit::SetAttribute {
            level: AttrLevel::Style,
            node,
            name,
            value,
        } => {
            graph.node(node).ok_or(PipelineError::UnknownNode(node.0))?;
            style_value(&lw.packs.schema, &name, &value)?;
            state.edits.style.entry(node).or_default().insert(name, value);
            state.invalidate(Stage::Gma);
        }
    }
    state.pending_edits += 1;
    if policy.due(state.pending_edits) {
        state.run(lw, &counts.snapshot(), None)?;
        return Ok(true);
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedReplacement {
    pub utterance: String,
    pub node: NodeId,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplaceReport {
    /// Ids of the utterances that were changed and regenerated.
    pub changed: Vec<String>,
    pub replaced_nodes: usize,
    pub skipped: Vec<SkippedReplacement>,
}

/// Replace LU `from` by `to` wherever `to` is a transfer candidate of the
/// same node, then regenerate the affected utterances.
pub fn global_replace(
    states: &mut [UtteranceState],
    from: &str,
    to: &str,
    lw: &Lingware,
    counts: &CountStore,
) -> Result<ReplaceReport, PipelineError> {
    let mut report = ReplaceReport::default();
    let mut touched = Vec::new();
    for (k, st) in states.iter_mut().enumerate() {
        let mut hit = false;
        let choices: Vec<_> = st
            .transfer_choices
            .iter()
            .filter(|c| c.chosen.as_deref() == Some(from))
            .map(|c| (c.node, c.uw.clone(), c.candidates.iter().any(|x| x.lu == to)))
            .collect();
        for (node, uw, ok) in choices {
            if !ok {
                report.skipped.push(SkippedReplacement {
                    utterance: st.id.clone(),
                    node,
                    reason: format!("`{to}` is not a candidate for {uw}"),
                });
                continue;
            }
            counts.increment(PairKind::Uw2Lu, &uw.to_string(), to)?;
            st.edits.lu.insert(node, to.to_string());
            report.replaced_nodes += 1;
            hit = true;
        }
        if hit {
            st.invalidate(Stage::Transferred);
            st.pending_edits += 1;
            touched.push(k);
            report.changed.push(st.id.clone());
        }
    }
    let snapshot = counts.snapshot();
    for k in touched {
        states[k].run(lw, &snapshot, None)?;
    }
    Ok(report)
}

/// The source utterance with the posteditor's interlingual attributes
/// added and a comment line marking it as a proposed revision. LU, UW and
/// style choices are target-side and stay out; an utterance without
/// attribute edits comes back unchanged.
pub fn export_enriched_graph(state: &UtteranceState, inventory: &Inventory) -> Result<String, PipelineError> {
    let attrs = &state.edits.attributes;
    if attrs.is_empty() {
        return Ok(serialize_utterance(&state.source));
    }
    let mut utt: Utterance = state.source.clone();
    let mut notes = vec!["proposed revision: attributes added in postedition".to_string()];
    for (n, edits) in attrs {
        let node = utt.graph.node_mut(*n).ok_or(PipelineError::UnknownNode(n.0))?;
        for (name, value) in edits {
            apply_attribute(node, inventory, name, value)?;
            notes.push(format!("node {n}: {name} = {value}"));
        }
    }
    let mut c = utt.comments.take().unwrap_or_default();
    if !c.is_empty() {
        c.push('\n');
    }
    c.push_str(&notes.join("\n"));
    utt.comments = Some(c);
    Ok(serialize_utterance(&utt))
}

/// Every utterance, enriched, as one document.
pub fn export_document(states: &[UtteranceState], inventory: &Inventory) -> Result<String, PipelineError> {
    let parts = states
        .iter()
        .map(|s| export_enriched_graph(s, inventory))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.join("\n"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuOption {
    pub lu: String,
    /// Dictionary UW the LU comes from.
    pub uw: String,
    /// Distance of that UW from the node's original UW (0 for the localized UW).
    pub distance: f64,
}

/// LUs a posteditor may pick for `node`: those of its localized UW or, with
/// `widen`, the union over every dictionary UW near the original UW.
pub fn lu_candidates(state: &UtteranceState, node: NodeId, widen_search: bool, lw: &Lingware) -> Result<Vec<LuOption>, PipelineError> {
    let original = &state.source.graph.node(node).ok_or(PipelineError::UnknownNode(node.0))?.uw;
    let localized = state
        .stages
        .localized
        .as_ref()
        .ok_or(PipelineError::Incomplete(Stage::Localized))?
        .node(node)
        .map(|n| n.uw.clone())
        .ok_or(PipelineError::UnknownNode(node.0))?;
    let mut out: Vec<LuOption> = lw
        .lexicon
        .entries_for(&localized)
        .map(|e| LuOption {
            lu: e.lu.clone(),
            uw: localized.to_string(),
            distance: 0.0,
        })
        .collect();
    if widen_search {
        let profile = lw
            .profile(&state.config.profile)
            .ok_or_else(|| PipelineError::UnknownProfile(state.config.profile.clone()))?;
        for c in widen(original, &lw.lexicon, None, profile) {
            for e in lw.lexicon.entries_for(&c.uw) {
                if !out.iter().any(|o| o.lu == e.lu) {
                    out.push(LuOption {
                        lu: e.lu.clone(),
                        uw: c.uw.to_string(),
                        distance: c.distance,
                    });
                }
            }
        }
    }
    Ok(out)
}
