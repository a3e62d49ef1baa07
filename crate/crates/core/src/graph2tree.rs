//! Graph-to-tree conversion.
//!
//! Arcs are consumed one at a time. An arc whose source already has a tree
//! node is taken forward (new child labelled `l` under the source); failing
//! that, an arc whose target has a tree node is taken reversed (new child
//! labelled `l^-1` under the target); failing both, the graph is not
//! connected. Every consumed arc creates exactly one tree node, so a node
//! that is the target of k arcs ends up with k copies.
//!
//! Arcs are scanned in (source, label, target) order and later children
//! attach to the earliest-created copy of a node, making the result
//! deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transfer::TransferredGraph;
use crate::tree::{Decoration, Tree, TreeNode};
use crate::unl::{NodeId, ScopeId, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum G2TError {
    #[error("non connected graph")]
    NonConnectedGraph,
    #[error("graph has no entry node")]
    MissingEntry,
    #[error("scope {0} has no entry node")]
    ScopeWithoutEntry(ScopeId),
}

/// One node of a level tree, in creation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelNode<V> {
    pub vertex: V,
    /// Relation label; `entry` for the root.
    pub label: String,
    /// Created from an arc consumed target-first.
    pub inverse: bool,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Result of converting one level (the top graph or one scope).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTree<V> {
    /// Index 0 is the root.
    pub nodes: Vec<LevelNode<V>>,
    /// Vertex to its tree copies, in creation order.
    pub association: BTreeMap<V, Vec<usize>>,
    pub reversed: usize,
}

impl<V: Ord> LevelTree<V> {
    /// Earliest-created tree node associated with `v`.
    pub fn choose_attachment(&self, v: &V) -> Option<usize> {
        self.association.get(v).and_then(|c| c.first().copied())
    }
}

/// The conversion loop over a bare arc set `(source, label, target)`.
///
/// `vertices` lists every vertex of the level; one left without a tree node
/// at the end also means the graph is not connected.
pub fn convert_arcs<V: Ord + Clone>(entry: V, arcs: &[(V, String, V)], vertices: &[V]) -> Result<LevelTree<V>, G2TError> {
    let mut remaining: Vec<&(V, String, V)> = arcs.iter().collect();
    remaining.sort_by(|a, b| (&a.0, &a.1, &a.2).cmp(&(&b.0, &b.1, &b.2)));
    let mut t = LevelTree {
        nodes: vec![LevelNode {
            vertex: entry.clone(),
            label: "entry".into(),
            inverse: false,
            parent: None,
            children: Vec::new(),
        }],
        association: BTreeMap::from([(entry, vec![0])]),
        reversed: 0,
    };
    while !remaining.is_empty() {
        let (pos, inverse) = if let Some(p) = remaining.iter().position(|a| t.association.contains_key(&a.0)) {
            (p, false)
        } else if let Some(p) = remaining.iter().position(|a| t.association.contains_key(&a.2)) {
            (p, true)
        } else {
            return Err(G2TError::NonConnectedGraph);
        };
        let (a, l, b) = remaining.remove(pos);
        let (anchor, new) = if inverse { (b, a) } else { (a, b) };
        let parent = t.choose_attachment(anchor).expect("anchor is associated");
        let idx = t.nodes.len();
        t.nodes.push(LevelNode {
            vertex: new.clone(),
            label: l.clone(),
            inverse,
            parent: Some(parent),
            children: Vec::new(),
        });
        t.nodes[parent].children.push(idx);
        t.association.entry(new.clone()).or_default().push(idx);
        if inverse {
            t.reversed += 1;
        }
    }
    if vertices.iter().any(|v| !t.association.contains_key(v)) {
        return Err(G2TError::NonConnectedGraph);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GTResult {
    pub tree: Tree,
    /// UNL node to the keys of its tree copies.
    pub association: BTreeMap<NodeId, Vec<u32>>,
    pub reversed_count: usize,
}

struct Builder<'a> {
    tg: &'a TransferredGraph,
    next_key: u32,
    association: BTreeMap<NodeId, Vec<u32>>,
    reversed: usize,
    levels: BTreeMap<Option<ScopeId>, LevelTree<Vertex>>,
}

impl<'a> Builder<'a> {
    fn level(&mut self, scope: Option<&ScopeId>) -> Result<(), G2TError> {
        let key = scope.cloned();
        if self.levels.contains_key(&key) {
            return Ok(());
        }
        let g = &self.tg.graph;
        let (entry, vertices): (NodeId, Vec<Vertex>) = match scope {
            None => {
                let entry = g.entry.ok_or(G2TError::MissingEntry)?;
                let mut vs: Vec<Vertex> = g
                    .nodes
                    .iter()
                    .filter(|n| n.scope.is_none())
                    .map(|n| Vertex::Node(n.id))
                    .collect();
                vs.extend(g.scopes.keys().map(|s| Vertex::Scope(s.clone())));
                (entry, vs)
            }
            Some(s) => {
                let entry = g.scope_entry(s).ok_or_else(|| G2TError::ScopeWithoutEntry(s.clone()))?;
                (entry, g.scopes[s].iter().map(|&n| Vertex::Node(n)).collect())
            }
        };
        let arcs: Vec<(Vertex, String, Vertex)> = g
            .arcs_in(scope)
            .map(|a| (a.source.clone(), a.label.clone(), a.target.clone()))
            .collect();
        let lt = convert_arcs(Vertex::Node(entry), &arcs, &vertices)?;
        self.reversed += lt.reversed;
        self.levels.insert(key, lt);
        Ok(())
    }

    fn build(&mut self, scope: Option<&ScopeId>, idx: usize) -> Result<TreeNode, G2TError> {
        let lt = &self.levels[&scope.cloned()];
        let ln = lt.nodes[idx].clone();
        let key = self.next_key;
        self.next_key += 1;
        let mut deco = Decoration::new();
        deco.set_atom("REL", ln.label.clone());
        deco.set_atom(
            "DIR",
            match (ln.parent, ln.inverse) {
                (None, _) => "ENTRY",
                (Some(_), false) => "FWD",
                (Some(_), true) => "INV",
            },
        );
        let mut node = match &ln.vertex {
            Vertex::Node(n) => {
                let t = self.tg.node(*n).expect("vertex is a graph node");
                deco.set_atom("NODE", "LEX");
                match &t.lu {
                    Some(lu) => deco.set_atom("UL", lu.clone()),
                    None => {
                        deco.set_atom("UNTRANS", "YES");
                        deco.set_atom("HW", t.uw.headword.clone());
                    }
                }
                deco.set_atom("CAT", t.category.clone());
                for (k, v) in &t.vars {
                    deco.set_atom(k, v.clone());
                }
                for a in t.attributes.keys().filter(|a| *a != "entry") {
                    deco.add("UATT", a.clone());
                }
                self.association.entry(*n).or_default().push(key);
                TreeNode::new(key, Some(*n), deco)
            }
            Vertex::Scope(s) => {
                deco.set_atom("NODE", "SCOPE");
                let mut scope_node = TreeNode::new(key, None, deco);
                self.level(Some(s))?;
                let inner = self.build(Some(s), 0)?;
                scope_node.unl = inner.unl;
                scope_node.children.push(inner);
                scope_node
            }
        };
        for c in ln.children {
            let child = self.build(scope, c)?;
            node.children.push(child);
        }
        Ok(node)
    }
}

/// Convert a transferred graph into the transfer tree.
///
/// Each scope becomes a `NODE=SCOPE` tree node whose first child is the
/// scope's own converted subtree.
pub fn graph_to_tree(tg: &TransferredGraph) -> Result<GTResult, G2TError> {
    let mut b = Builder {
        tg,
        next_key: 1,
        association: BTreeMap::new(),
        reversed: 0,
        levels: BTreeMap::new(),
    };
    b.level(None)?;
    let root = b.build(None, 0)?;
    Ok(GTResult {
        tree: Tree::new(root),
        association: b.association,
        reversed_count: b.reversed,
    })
}
