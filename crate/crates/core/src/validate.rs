//! Accept or reject a graph before deconversion.
//!
//! Connectivity is checked on the undirected view of each level (top level
//! and every scope), since graph-to-tree conversion consumes arcs in both
//! directions. Nodes unreachable from the entry along forward arcs only earn a
//! warning: conversion will reverse some arcs to reach them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::unl::{Inventory, NodeId, ScopeId, UnlGraph, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Locus {
    Graph,
    Node(NodeId),
    /// Index into `UnlGraph::arcs`.
    Arc(usize),
    Scope(ScopeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: String,
    pub locus: Locus,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.ok { "ok" } else { "rejected" })?;
        for i in &self.issues {
            let sev = match i.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            let locus = match &i.locus {
                Locus::Graph => "graph".to_string(),
                Locus::Node(n) => format!("node {n}"),
                Locus::Arc(a) => format!("arc #{}", a + 1),
                Locus::Scope(s) => format!("scope {s}"),
            };
            writeln!(f, "  {sev} {} at {locus}: {}", i.code, i.message)?;
        }
        Ok(())
    }
}

pub const CONNECTIVITY: &str = "CONNECTIVITY";
pub const UNKNOWN_RELATION: &str = "UNKNOWN_RELATION";
pub const UNKNOWN_ATTRIBUTE: &str = "UNKNOWN_ATTRIBUTE";
pub const MISSING_ENTRY: &str = "MISSING_ENTRY";
pub const DANGLING_SCOPE: &str = "DANGLING_SCOPE";
pub const SELF_LOOP: &str = "SELF_LOOP";
pub const UNREACHABLE: &str = "UNREACHABLE";

struct Collector(Vec<Issue>);

impl Collector {
    fn push(&mut self, severity: Severity, code: &str, locus: Locus, message: String) {
        self.0.push(Issue {
            severity,
            code: code.to_string(),
            locus,
            message,
        });
    }
}

pub fn validate(graph: &UnlGraph, inventory: &Inventory) -> ValidationReport {
    let mut c = Collector(Vec::new());

    for (i, arc) in graph.arcs.iter().enumerate() {
        if !inventory.has_relation(&arc.label) {
            c.push(
                Severity::Error,
                UNKNOWN_RELATION,
                Locus::Arc(i),
                format!("relation `{}` is not declared", arc.label),
            );
        }
        for v in [&arc.source, &arc.target] {
            if let Vertex::Scope(s) = v {
                if !graph.scopes.contains_key(s) {
                    c.push(
                        Severity::Error,
                        DANGLING_SCOPE,
                        Locus::Arc(i),
                        format!("scope {s} is referenced but has no arcs"),
                    );
                }
            }
        }
        if arc.source == arc.target && !inventory.reflexive.contains(&arc.label) {
            c.push(
                Severity::Error,
                SELF_LOOP,
                Locus::Arc(i),
                format!("relation `{}` may not link a node to itself", arc.label),
            );
        }
    }
    for node in &graph.nodes {
        for a in node.attr_names() {
            if !inventory.has_attribute(a) {
                c.push(
                    Severity::Error,
                    UNKNOWN_ATTRIBUTE,
                    Locus::Node(node.id),
                    format!("attribute `@{a}` is not declared"),
                );
            }
        }
    }

    // top level: nodes outside scopes plus referenced scope vertices
    let mut top: BTreeSet<Vertex> = graph
        .nodes
        .iter()
        .filter(|n| n.scope.is_none())
        .map(|n| Vertex::Node(n.id))
        .collect();
    for arc in graph.arcs_in(None) {
        top.insert(arc.source.clone());
        top.insert(arc.target.clone());
    }
    match graph.entry {
        None => c.push(
            Severity::Error,
            MISSING_ENTRY,
            Locus::Graph,
            "no node carries @entry".into(),
        ),
        Some(e) => check_level(graph, None, &top, &Vertex::Node(e), true, &mut c),
    }
    if graph.entry.is_none() {
        check_connected_only(graph, None, &top, &mut c);
    }

    for (sid, members) in &graph.scopes {
        let vertices: BTreeSet<Vertex> = members.iter().map(|&n| Vertex::Node(n)).collect();
        match graph.scope_entry(sid) {
            None => {
                c.push(
                    Severity::Error,
                    MISSING_ENTRY,
                    Locus::Scope(sid.clone()),
                    format!("scope {sid} has no @entry node"),
                );
                check_connected_only(graph, Some(sid), &vertices, &mut c);
            }
            Some(e) => check_level(graph, Some(sid), &vertices, &Vertex::Node(e), true, &mut c),
        }
    }

    let ok = !c.0.iter().any(|i| i.severity == Severity::Error);
    ValidationReport { ok, issues: c.0 }
}

fn adjacency<'a>(
    graph: &'a UnlGraph,
    scope: Option<&'a ScopeId>,
    directed: bool,
) -> BTreeMap<&'a Vertex, Vec<&'a Vertex>> {
    let mut adj: BTreeMap<&Vertex, Vec<&Vertex>> = BTreeMap::new();
    for arc in graph.arcs_in(scope) {
        adj.entry(&arc.source).or_default().push(&arc.target);
        if !directed {
            adj.entry(&arc.target).or_default().push(&arc.source);
        }
    }
    adj
}

fn reach<'a>(start: &'a Vertex, adj: &BTreeMap<&'a Vertex, Vec<&'a Vertex>>) -> BTreeSet<&'a Vertex> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(v).into_iter().flatten() {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

fn locus_of(v: &Vertex) -> Locus {
    match v {
        Vertex::Node(n) => Locus::Node(*n),
        Vertex::Scope(s) => Locus::Scope(s.clone()),
    }
}

fn level_name(scope: Option<&ScopeId>) -> String {
    scope.map_or("the top level".into(), |s| format!("scope {s}"))
}

fn check_connected_only(graph: &UnlGraph, scope: Option<&ScopeId>, vertices: &BTreeSet<Vertex>, c: &mut Collector) {
    // without an entry there is no direction to check, only connectivity
    if let Some(first) = vertices.iter().next() {
        check_level(graph, scope, vertices, first, false, c);
    }
}

fn check_level(
    graph: &UnlGraph,
    scope: Option<&ScopeId>,
    vertices: &BTreeSet<Vertex>,
    entry: &Vertex,
    warn_unreachable: bool,
    c: &mut Collector,
) {
    let undirected = adjacency(graph, scope, false);
    let connected = reach(entry, &undirected);
    let mut cut: Vec<&Vertex> = vertices.iter().filter(|v| !connected.contains(v)).collect();
    cut.sort();
    for v in &cut {
        c.push(
            Severity::Error,
            CONNECTIVITY,
            locus_of(v),
            format!("not connected to the entry component of {}", level_name(scope)),
        );
    }
    if !warn_unreachable {
        return;
    }
    let directed = adjacency(graph, scope, true);
    let forward = reach(entry, &directed);
    for v in vertices {
        if connected.contains(v) && !forward.contains(v) {
            c.push(
                Severity::Warning,
                UNREACHABLE,
                locus_of(v),
                "not reachable from the entry along arc directions; some arcs will be reversed".into(),
            );
        }
    }
}
