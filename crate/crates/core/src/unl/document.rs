//! Line-oriented UNL document format.
//!
//! ```text
//! ; optional comment lines
//! [en]The cat eats fish.[/en]
//! [unl]
//! agt(eat(icl>do).@entry.@present, cat(icl>animal).@def)
//! obj(eat(icl>do), fish(icl>animal))
//! [/unl]
//! ```
//!
//! A term is a UW, an optional `:NN` instance suffix and `.@attr` attributes.
//! `:SS` alone refers to a scope; arcs written `rel:SS(...)` belong to it.
//! A line holding a single term declares a node without arcs.
//! The grammar is in `docs/unl-document.ebnf`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use super::graph::{AttrOrigin, NodeId, ScopeId, UnlArc, UnlDocument, UnlGraph, UnlNode, Utterance, Vertex};
use super::inventory::Inventory;
use super::uw::{parse_uw, split_top_level, Uw};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("empty graph")]
    EmptyGraph,
    #[error("more than one entry node in {0}")]
    DuplicateEntryNode(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("scope {0} is referenced inside another scope; nested hypernodes are not supported")]
    NestedScope(String),
    #[error("node `{0}` appears in two different scopes")]
    ScopeConflict(String),
    #[error("block opened here is never closed with [/unl]")]
    UnterminatedBlock,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct DocumentError {
    pub line: usize,
    pub kind: DocumentErrorKind,
}

/// Parse with inventory checks deferred to the validator.
pub fn parse_document(text: &str) -> Result<UnlDocument, DocumentError> {
    parse_document_with(text, None)
}

/// Parse, rejecting relations and attributes missing from `inventory`.
pub fn parse_document_strict(text: &str, inventory: &Inventory) -> Result<UnlDocument, DocumentError> {
    parse_document_with(text, Some(inventory))
}

fn parse_document_with(text: &str, inventory: Option<&Inventory>) -> Result<UnlDocument, DocumentError> {
    let mut doc = UnlDocument::default();
    let mut comments: Vec<String> = Vec::new();
    let mut renderings = BTreeMap::new();
    let mut body: Option<(usize, GraphBuilder)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        let err = |kind| DocumentError { line: line_no, kind };

        if let Some((start, builder)) = body.as_mut() {
            if line == "[/unl]" {
                let start = *start;
                let builder = std::mem::take(builder);
                body = None;
                let graph = builder.finish().map_err(|kind| DocumentError { line: start, kind })?;
                doc.utterances.push(Utterance {
                    graph,
                    comments: (!comments.is_empty()).then(|| comments.join("\n")),
                    renderings: std::mem::take(&mut renderings),
                });
                comments.clear();
            } else if line == "[unl]" {
                return Err(err(DocumentErrorKind::Syntax("nested [unl] block".into())));
            } else if !line.is_empty() && !line.starts_with(';') {
                builder.line(line, inventory).map_err(err)?;
            }
            continue;
        }

        if line.is_empty() {
            continue;
        }
        if line == "[unl]" {
            body = Some((line_no, GraphBuilder::default()));
        } else if let Some(c) = line.strip_prefix(';') {
            comments.push(c.trim().to_string());
        } else if let Some((tag, text)) = parse_rendering(line) {
            renderings.insert(tag, text);
        } else {
            return Err(err(DocumentErrorKind::Syntax(format!(
                "unexpected line outside a [unl] block: `{line}`"
            ))));
        }
    }
    if let Some((start, _)) = body {
        return Err(DocumentError {
            line: start,
            kind: DocumentErrorKind::UnterminatedBlock,
        });
    }
    Ok(doc)
}

fn parse_rendering(line: &str) -> Option<(String, String)> {
    let rest = line.strip_prefix('[')?;
    let close = rest.find(']')?;
    let tag = &rest[..close];
    if !(2..=3).contains(&tag.len()) || !tag.bytes().all(|b| b.is_ascii_lowercase()) || tag == "unl" {
        return None;
    }
    let body = rest[close + 1..].strip_suffix(&format!("[/{tag}]"))?;
    Some((tag.to_string(), body.trim().to_string()))
}

/// A parsed arc endpoint before node ids are assigned.
#[derive(Debug)]
enum RawTerm {
    Scope(String),
    Node {
        uw: Uw,
        instance: Option<String>,
        attrs: Vec<String>,
    },
}

fn parse_term(text: &str) -> Result<RawTerm, String> {
    let text = text.trim();
    if let Some(scope) = text.strip_prefix(':') {
        if scope.is_empty() || !scope.bytes().all(|b| b.is_ascii_alphanumeric()) {
            return Err(format!("bad scope reference `{text}`"));
        }
        return Ok(RawTerm::Scope(scope.to_string()));
    }
    // the UW ends at the first depth-0 `:` or `.@`
    let mut depth = 0i32;
    let mut end = text.len();
    let bytes = text.as_bytes();
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ':' if depth == 0 => {
                end = i;
                break;
            }
            '.' if depth == 0 && bytes.get(i + 1) == Some(&b'@') => {
                end = i;
                break;
            }
            _ => {}
        }
    }
    let uw = parse_uw(&text[..end]).map_err(|e| e.to_string())?;
    if uw.headword.contains(['<', '>', ':', '@']) {
        return Err(format!("bad headword `{}`", uw.headword));
    }
    let mut rest = &text[end..];
    let mut instance = None;
    if let Some(r) = rest.strip_prefix(':') {
        let stop = r.find(".@").unwrap_or(r.len());
        let inst = &r[..stop];
        if inst.is_empty() || !inst.bytes().all(|b| b.is_ascii_alphanumeric()) {
            return Err(format!("bad instance suffix in `{text}`"));
        }
        instance = Some(inst.to_string());
        rest = &r[stop..];
    }
    let mut attrs = Vec::new();
    while !rest.is_empty() {
        let r = rest
            .strip_prefix(".@")
            .ok_or_else(|| format!("unexpected `{rest}` in term `{text}`"))?;
        let stop = r.find(".@").unwrap_or(r.len());
        let attr = r[..stop].trim();
        if attr.is_empty() || !attr.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_') {
            return Err(format!("bad attribute `{attr}` in term `{text}`"));
        }
        attrs.push(attr.to_string());
        rest = &r[stop..];
    }
    Ok(RawTerm::Node { uw, instance, attrs })
}

/// `rel[:SS](t1, t2)`; `None` when the line does not have arc shape.
fn split_arc(line: &str) -> Option<(String, Option<String>, String, String)> {
    let open = line.find('(')?;
    if !line.ends_with(')') {
        return None;
    }
    let head = &line[..open];
    let (rel, scope) = match head.split_once(':') {
        Some((r, s)) => (r.trim(), Some(s.trim())),
        None => (head.trim(), None),
    };
    if !(2..=4).contains(&rel.len()) || !rel.bytes().all(|b| b.is_ascii_lowercase()) {
        return None;
    }
    if let Some(s) = scope {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_alphanumeric()) {
            return None;
        }
    }
    let inner = &line[open + 1..line.len() - 1];
    let parts = split_top_level(inner, ',');
    if parts.len() != 2 {
        return None;
    }
    Some((
        rel.to_string(),
        scope.map(str::to_string),
        parts[0].trim().to_string(),
        parts[1].trim().to_string(),
    ))
}

#[derive(Default)]
struct GraphBuilder {
    graph: UnlGraph,
    index: HashMap<(String, Option<String>), NodeId>,
    scope_entries: BTreeMap<Option<ScopeId>, NodeId>,
    lines: usize,
}

impl GraphBuilder {
    fn line(&mut self, line: &str, inventory: Option<&Inventory>) -> Result<(), DocumentErrorKind> {
        self.lines += 1;
        if let Some((rel, scope, a, b)) = split_arc(line) {
            if let (Ok(ta), Ok(tb)) = (parse_term(&a), parse_term(&b)) {
                if let Some(inv) = inventory {
                    if !inv.has_relation(&rel) {
                        return Err(DocumentErrorKind::UnknownRelation(rel));
                    }
                }
                let scope = scope.map(ScopeId);
                let source = self.vertex(ta, scope.as_ref(), inventory)?;
                let target = self.vertex(tb, scope.as_ref(), inventory)?;
                self.graph.arcs.push(UnlArc {
                    source,
                    target,
                    label: rel,
                    scope,
                });
                return Ok(());
            }
        }
        match parse_term(line) {
            Ok(t @ RawTerm::Node { .. }) => {
                self.vertex(t, None, inventory)?;
                Ok(())
            }
            Ok(RawTerm::Scope(_)) => Err(DocumentErrorKind::Syntax(format!(
                "a scope reference cannot stand alone: `{line}`"
            ))),
            Err(e) => Err(DocumentErrorKind::Syntax(format!("cannot parse `{line}`: {e}"))),
        }
    }

    fn vertex(
        &mut self,
        term: RawTerm,
        scope: Option<&ScopeId>,
        inventory: Option<&Inventory>,
    ) -> Result<Vertex, DocumentErrorKind> {
        match term {
            RawTerm::Scope(s) => {
                let sid = ScopeId(s);
                if scope.is_some() {
                    return Err(DocumentErrorKind::NestedScope(sid.to_string()));
                }
                Ok(Vertex::Scope(sid))
            }
            RawTerm::Node { uw, instance, attrs } => {
                if let Some(inv) = inventory {
                    if let Some(a) = attrs.iter().find(|a| !inv.has_attribute(a)) {
                        return Err(DocumentErrorKind::UnknownAttribute(a.clone()));
                    }
                }
                let key = (uw.to_string(), instance.clone());
                let id = match self.index.get(&key) {
                    Some(&id) => {
                        let node = self.graph.node(id).expect("indexed node exists");
                        if node.scope.as_ref() != scope {
                            return Err(DocumentErrorKind::ScopeConflict(node.term()));
                        }
                        id
                    }
                    None => {
                        let id = NodeId(self.graph.nodes.len() as u32 + 1);
                        self.graph.nodes.push(UnlNode {
                            id,
                            uw,
                            instance,
                            attributes: BTreeMap::new(),
                            scope: scope.cloned(),
                        });
                        self.index.insert(key, id);
                        if let Some(s) = scope {
                            self.graph.scopes.entry(s.clone()).or_default().insert(id);
                        }
                        id
                    }
                };
                let is_entry = attrs.iter().any(|a| a == "entry");
                let node = self.graph.node_mut(id).expect("node exists");
                for a in attrs {
                    node.attributes.insert(a, AttrOrigin::Source);
                }
                if is_entry {
                    let slot = scope.cloned();
                    match self.scope_entries.get(&slot) {
                        Some(&prev) if prev != id => {
                            let place = slot.map_or("the top level".to_string(), |s| format!("scope {s}"));
                            return Err(DocumentErrorKind::DuplicateEntryNode(place));
                        }
                        _ => {
                            self.scope_entries.insert(slot, id);
                        }
                    }
                }
                Ok(Vertex::Node(id))
            }
        }
    }

    fn finish(mut self) -> Result<UnlGraph, DocumentErrorKind> {
        if self.lines == 0 || self.graph.nodes.is_empty() {
            return Err(DocumentErrorKind::EmptyGraph);
        }
        self.graph.entry = self.scope_entries.get(&None).copied();
        Ok(self.graph)
    }
}

/// Serialize to the normalized line format; the inverse of [`parse_document`].
///
/// Defaulted attributes are omitted: they are not part of the source graph.
pub fn serialize_document(doc: &UnlDocument) -> String {
    let mut out = String::new();
    for (i, utt) in doc.utterances.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&serialize_utterance(utt));
    }
    out
}

pub fn serialize_utterance(utt: &Utterance) -> String {
    let mut out = String::new();
    if let Some(c) = &utt.comments {
        for line in c.lines() {
            if line.is_empty() {
                out.push_str(";\n");
            } else {
                let _ = writeln!(out, "; {line}");
            }
        }
    }
    for (tag, text) in &utt.renderings {
        let _ = writeln!(out, "[{tag}]{text}[/{tag}]");
    }
    out.push_str("[unl]\n");
    out.push_str(&serialize_graph_body(&utt.graph));
    out.push_str("[/unl]\n");
    out
}

/// Arc and node lines of a graph, ordered so that re-parsing reproduces the
/// same canonical node ids.
pub fn serialize_graph_body(graph: &UnlGraph) -> String {
    let mut in_arc: BTreeSet<NodeId> = BTreeSet::new();
    for arc in &graph.arcs {
        in_arc.extend(arc.source.node());
        in_arc.extend(arc.target.node());
    }
    let mut emitted: BTreeSet<NodeId> = BTreeSet::new();
    let mut next = 1u32;
    let mut out = String::new();

    let term = |v: &Vertex, emitted: &mut BTreeSet<NodeId>| -> String {
        match v {
            Vertex::Scope(s) => s.to_string(),
            Vertex::Node(id) => {
                let node = graph.node(*id).expect("arc endpoint exists");
                let mut t = node.term();
                if emitted.insert(*id) {
                    for (name, origin) in &node.attributes {
                        if *origin != AttrOrigin::Defaulted {
                            let _ = write!(t, ".@{name}");
                        }
                    }
                }
                t
            }
        }
    };
    let flush_isolated = |next: &mut u32, emitted: &mut BTreeSet<NodeId>, out: &mut String| {
        while let Some(node) = graph.node(NodeId(*next)) {
            if emitted.contains(&node.id) {
                *next += 1;
            } else if !in_arc.contains(&node.id) {
                let t = term(&Vertex::Node(node.id), emitted);
                out.push_str(&t);
                out.push('\n');
                *next += 1;
            } else {
                break;
            }
        }
    };

    for arc in &graph.arcs {
        flush_isolated(&mut next, &mut emitted, &mut out);
        let a = term(&arc.source, &mut emitted);
        let b = term(&arc.target, &mut emitted);
        match &arc.scope {
            Some(s) => {
                let _ = writeln!(out, "{}:{}({a}, {b})", arc.label, s.0);
            }
            None => {
                let _ = writeln!(out, "{}({a}, {b})", arc.label);
            }
        }
    }
    flush_isolated(&mut next, &mut emitted, &mut out);
    // any node still missing (ids not canonical) goes last
    for node in &graph.nodes {
        if !emitted.contains(&node.id) {
            let t = term(&Vertex::Node(node.id), &mut emitted);
            out.push_str(&t);
            out.push('\n');
        }
    }
    out
}
