//! Ordered decorated trees.
//!
//! Every node carries a [`Decoration`] plus engine-managed tactical fields:
//! a stable `key` that survives rewriting, the UNL node index `n` it stems
//! from, and (once syntactic generation is over) its canonical UMC index `i`.
//! Rule packs can read `n` and `i` but never write them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::unl::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    /// Exclusive and string variables.
    Atom(String),
    /// Non-exclusive variables.
    Set(BTreeSet<String>),
}

impl Value {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(s) => Some(s),
            Value::Set(_) => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<String>> {
        match self {
            Value::Set(s) => Some(s),
            Value::Atom(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(s) if s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') && !s.is_empty() => {
                f.write_str(s)
            }
            Value::Atom(s) => write!(f, "{s:?}"),
            Value::Set(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(v)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A mask of variables: variable name to value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decoration(pub BTreeMap<String, Value>);

impl Decoration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn atom(&self, var: &str) -> Option<&str> {
        self.0.get(var).and_then(Value::as_atom)
    }

    pub fn is(&self, var: &str, value: &str) -> bool {
        self.atom(var) == Some(value)
    }

    /// Whether a non-exclusive variable holds `value`.
    pub fn has(&self, var: &str, value: &str) -> bool {
        self.0
            .get(var)
            .and_then(Value::as_set)
            .is_some_and(|s| s.contains(value))
    }

    pub fn set_atom(&mut self, var: &str, value: impl Into<String>) {
        self.0.insert(var.to_string(), Value::Atom(value.into()));
    }

    pub fn add(&mut self, var: &str, value: impl Into<String>) {
        match self.0.entry(var.to_string()).or_insert_with(|| Value::Set(BTreeSet::new())) {
            Value::Set(s) => {
                s.insert(value.into());
            }
            slot @ Value::Atom(_) => *slot = Value::Set(BTreeSet::from([value.into()])),
        }
    }

    pub fn remove(&mut self, var: &str, value: &str) {
        if let Some(Value::Set(s)) = self.0.get_mut(var) {
            s.remove(value);
            if s.is_empty() {
                self.0.remove(var);
            }
        }
    }

    pub fn unset(&mut self, var: &str) {
        self.0.remove(var);
    }

    pub fn put(&mut self, var: &str, value: Option<Value>) {
        match value {
            Some(Value::Set(s)) if s.is_empty() => {
                self.0.remove(var);
            }
            Some(v) => {
                self.0.insert(var.to_string(), v);
            }
            None => {
                self.0.remove(var);
            }
        }
    }
}

impl fmt::Display for Decoration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Stable identity across phases; fresh for nodes created by rules.
    pub key: u32,
    /// Tactical `n`: the UNL node this tree node realizes (for created
    /// nodes, the node of their governor).
    pub unl: Option<NodeId>,
    /// Tactical `i`: canonical index in the UMC tree, preorder from 1.
    pub umc: Option<u32>,
    /// Created by a rewrite rule rather than by graph-to-tree conversion.
    pub created: bool,
    pub deco: Decoration,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn new(key: u32, unl: Option<NodeId>, deco: Decoration) -> Self {
        TreeNode {
            key,
            unl,
            umc: None,
            created: false,
            deco,
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Preorder traversal.
    pub fn walk(&self) -> Walk<'_> {
        Walk { stack: vec![self] }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.walk().filter(|n| n.is_leaf())
    }

    fn walk_mut(&mut self, f: &mut impl FnMut(&mut TreeNode)) {
        f(self);
        for c in self.children.iter_mut() {
            c.walk_mut(f);
        }
    }

    /// Path of child indices from this node to the node with `key`.
    pub fn path_to(&self, key: u32) -> Option<Vec<usize>> {
        if self.key == key {
            return Some(Vec::new());
        }
        for (i, c) in self.children.iter().enumerate() {
            if let Some(mut p) = c.path_to(key) {
                p.insert(0, i);
                return Some(p);
            }
        }
        None
    }

    pub fn at(&self, path: &[usize]) -> Option<&TreeNode> {
        let mut cur = self;
        for &i in path {
            cur = cur.children.get(i)?;
        }
        Some(cur)
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut TreeNode> {
        let mut cur = self;
        for &i in path {
            cur = cur.children.get_mut(i)?;
        }
        Some(cur)
    }

    /// The tree edge label: `REL`, with `^-1` for reversed arcs.
    pub fn label(&self) -> String {
        let rel = self.deco.atom("REL").unwrap_or("-");
        if self.deco.is("DIR", "INV") {
            format!("{rel}^-1")
        } else {
            rel.to_string()
        }
    }

    /// Short head text for dumps: lemma, LU, untranslated headword or node kind.
    pub fn head(&self) -> String {
        ["LEMMA", "UL", "HW"]
            .iter()
            .find_map(|v| self.deco.atom(v))
            .map(str::to_string)
            .unwrap_or_else(|| self.deco.atom("NODE").unwrap_or("?").to_string())
    }
}

pub struct Walk<'a> {
    stack: Vec<&'a TreeNode>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = &'a TreeNode;
    fn next(&mut self) -> Option<&'a TreeNode> {
        let n = self.stack.pop()?;
        self.stack.extend(n.children.iter().rev());
        Some(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    pub root: TreeNode,
    /// Next fresh key.
    pub next_key: u32,
}

impl Tree {
    pub fn new(root: TreeNode) -> Self {
        let next_key = root.walk().map(|n| n.key).max().unwrap_or(0) + 1;
        Tree { root, next_key }
    }

    pub fn fresh_key(&mut self) -> u32 {
        let k = self.next_key;
        self.next_key += 1;
        k
    }

    pub fn size(&self) -> usize {
        self.root.walk().count()
    }

    pub fn find(&self, key: u32) -> Option<&TreeNode> {
        self.root.walk().find(|n| n.key == key)
    }

    pub fn find_umc(&self, i: u32) -> Option<&TreeNode> {
        self.root.walk().find(|n| n.umc == Some(i))
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut TreeNode)) {
        self.root.walk_mut(&mut f);
    }

    /// Number every node in preorder from 1 (the tactical `i`).
    pub fn assign_umc_indices(&mut self) {
        let mut i = 0;
        self.for_each_mut(|n| {
            i += 1;
            n.umc = Some(i);
        });
    }

    /// Parent key of the node with `key`.
    pub fn parent_of(&self, key: u32) -> Option<&TreeNode> {
        let path = self.root.path_to(key)?;
        if path.is_empty() {
            return None;
        }
        self.root.at(&path[..path.len() - 1])
    }

    /// Indented dump, one node per line: `label head #n {decoration}`.
    pub fn to_indented(&self) -> String {
        fn go(n: &TreeNode, depth: usize, out: &mut String) {
            let _ = write!(out, "{}{} {}", "  ".repeat(depth), n.label(), n.head());
            if let Some(u) = n.unl {
                let _ = write!(out, " #{u}");
            }
            if let Some(i) = n.umc {
                let _ = write!(out, " &{i}");
            }
            let _ = writeln!(out, " {}", n.deco);
            for c in &n.children {
                go(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        go(&self.root, 0, &mut out);
        out
    }

    /// Bracketed form: `(label head#n child...)`.
    pub fn to_bracketed(&self) -> String {
        fn go(n: &TreeNode, out: &mut String) {
            let _ = write!(out, "({} {}", n.label(), n.head());
            if let Some(u) = n.unl {
                let _ = write!(out, "#{u}");
            }
            for c in &n.children {
                out.push(' ');
                go(c, out);
            }
            out.push(')');
        }
        let mut out = String::new();
        go(&self.root, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(key: u32, rel: &str, ul: &str) -> TreeNode {
        let mut d = Decoration::new();
        d.set_atom("REL", rel);
        d.set_atom("UL", ul);
        TreeNode::new(key, Some(NodeId(key)), d)
    }

    fn sample() -> Tree {
        let mut root = leaf(1, "entry", "manger");
        let mut inv = leaf(3, "mod", "rouge");
        inv.deco.set_atom("DIR", "INV");
        root.children = vec![leaf(2, "agt", "chat"), inv];
        Tree::new(root)
    }

    #[test]
    fn dumps() {
        let t = sample();
        assert_eq!(t.to_bracketed(), "(entry manger#1 (agt chat#2) (mod^-1 rouge#3))");
        let ind = t.to_indented();
        assert!(ind.starts_with("entry manger #1 {REL=entry, UL=manger}\n  agt chat #2"));
    }

    #[test]
    fn keys_paths_and_indices() {
        let mut t = sample();
        assert_eq!(t.next_key, 4);
        assert_eq!(t.fresh_key(), 4);
        assert_eq!(t.root.path_to(3), Some(vec![1]));
        assert_eq!(t.parent_of(3).unwrap().key, 1);
        assert!(t.parent_of(1).is_none());
        t.assign_umc_indices();
        let order: Vec<_> = t.root.walk().map(|n| (n.key, n.umc.unwrap())).collect();
        assert_eq!(order, [(1, 1), (2, 2), (3, 3)]);
        assert_eq!(t.root.leaves().count(), 2);
    }

    #[test]
    fn decoration_ops() {
        let mut d = Decoration::new();
        d.add("UATT", "pl");
        d.add("UATT", "def");
        assert!(d.has("UATT", "pl"));
        d.remove("UATT", "pl");
        d.remove("UATT", "def");
        assert!(d.get("UATT").is_none());
        d.set_atom("LEMMA", "l'arbre");
        assert_eq!(d.to_string(), "{LEMMA=\"l'arbre\"}");
        d.put("LEMMA", None);
        assert_eq!(d, Decoration::new());
    }
}
