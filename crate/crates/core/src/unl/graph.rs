use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::uw::Uw;

/// Canonical node index `n`, dense from 1 in order of first textual occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Scope (hypernode) identifier, the `SS` in `:SS`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScopeId(pub String);

impl fmt::Display for ScopeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ":{}", self.0)
    }
}

/// An arc endpoint: an ordinary node or a reference to a hypernode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vertex {
    Node(NodeId),
    Scope(ScopeId),
}

impl Vertex {
    pub fn node(&self) -> Option<NodeId> {
        match self {
            Vertex::Node(n) => Some(*n),
            Vertex::Scope(_) => None,
        }
    }
}

/// Where an attribute on a node came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrOrigin {
    /// Present in the input graph.
    Source,
    /// Filled in from a profile default during cultural localization.
    Defaulted,
    /// Added by a posteditor.
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnlNode {
    pub id: NodeId,
    pub uw: Uw,
    /// Instance suffix (`:02`) distinguishing several nodes with one UW.
    pub instance: Option<String>,
    pub attributes: BTreeMap<String, AttrOrigin>,
    pub scope: Option<ScopeId>,
}

impl UnlNode {
    pub fn has_attr(&self, name: &str) -> bool {
        self.attributes.contains_key(name)
    }

    pub fn attr_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.keys().map(String::as_str)
    }

    /// The node's surface term as written in a document: UW plus instance.
    pub fn term(&self) -> String {
        match &self.instance {
            Some(i) => format!("{}:{}", self.uw, i),
            None => self.uw.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnlArc {
    pub source: Vertex,
    pub target: Vertex,
    pub label: String,
    /// The scope this arc belongs to, `None` at top level.
    pub scope: Option<ScopeId>,
}

/// A UNL hypergraph.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UnlGraph {
    /// Indexed by `NodeId.0 - 1`.
    pub nodes: Vec<UnlNode>,
    /// In source order.
    pub arcs: Vec<UnlArc>,
    pub scopes: BTreeMap<ScopeId, BTreeSet<NodeId>>,
    /// Top-level entry node.
    pub entry: Option<NodeId>,
}

impl UnlGraph {
    pub fn node(&self, id: NodeId) -> Option<&UnlNode> {
        (id.0 as usize)
            .checked_sub(1)
            .and_then(|i| self.nodes.get(i))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut UnlNode> {
        (id.0 as usize)
            .checked_sub(1)
            .and_then(move |i| self.nodes.get_mut(i))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    /// Entry of a scope: its member carrying `entry`.
    pub fn scope_entry(&self, scope: &ScopeId) -> Option<NodeId> {
        self.scopes
            .get(scope)?
            .iter()
            .copied()
            .find(|&id| self.node(id).is_some_and(|n| n.has_attr("entry")))
    }

    /// Arcs belonging to one level (`None` = top level).
    pub fn arcs_in<'a>(&'a self, scope: Option<&'a ScopeId>) -> impl Iterator<Item = &'a UnlArc> + 'a {
        self.arcs.iter().filter(move |a| a.scope.as_ref() == scope)
    }

    pub fn vertex_exists(&self, v: &Vertex) -> bool {
        match v {
            Vertex::Node(n) => self.node(*n).is_some(),
            Vertex::Scope(s) => self.scopes.contains_key(s),
        }
    }

    /// Arcs incident to `node` in either direction.
    pub fn incident(&self, node: NodeId) -> impl Iterator<Item = &UnlArc> {
        let v = Vertex::Node(node);
        self.arcs
            .iter()
            .filter(move |a| a.source == v || a.target == v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Utterance {
    pub graph: UnlGraph,
    pub comments: Option<String>,
    pub renderings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UnlDocument {
    pub utterances: Vec<Utterance>,
}
