//! Pattern matching and rule application.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::compile::{Assign, CmpOp, Cond, Field, Grammar, Guard, NodeRef, Operand, PItem, PNode, Rule, TItem, TKind, TNode};
use super::schema::{Schema, VarKind};
use super::RewriteError;
use crate::tree::{Decoration, Tree, TreeNode, Value};
use crate::unl::NodeId;

/// Upper bound on candidate matches examined per (rule, position).
const MATCH_BUDGET: usize = 4096;

/// Paths are relative to the matched root.
#[derive(Debug, Clone, Default)]
pub struct Binding {
    pub nodes: BTreeMap<String, Vec<usize>>,
    /// Gap name to (parent path, start, end).
    pub gaps: BTreeMap<String, (Vec<usize>, usize, usize)>,
}

fn cond_holds(c: &Cond, d: &Decoration) -> bool {
    match c {
        Cond::Defined(v) => d.get(v).is_some(),
        Cond::Undefined(v) => d.get(v).is_none(),
        Cond::In(v, vals) => d.atom(v).is_some_and(|a| vals.iter().any(|x| x == a)),
        Cond::NotIn(v, vals) => !d.atom(v).is_some_and(|a| vals.iter().any(|x| x == a)),
        Cond::Has(v, vals) => vals.iter().any(|x| d.has(v, x)),
        Cond::HasNot(v, vals) => !vals.iter().any(|x| d.has(v, x)),
    }
}

fn match_node(p: &PNode, t: &TreeNode, path: Vec<usize>, mut b: Binding, out: &mut Vec<Binding>) {
    if out.len() >= MATCH_BUDGET || !p.conds.iter().all(|c| cond_holds(c, &t.deco)) {
        return;
    }
    b.nodes.insert(p.var.clone(), path.clone());
    match &p.children {
        None => out.push(b),
        Some(items) => match_seq(items, &t.children, 0, &path, b, out),
    }
}

fn match_seq(items: &[PItem], children: &[TreeNode], ci: usize, parent: &[usize], b: Binding, out: &mut Vec<Binding>) {
    if out.len() >= MATCH_BUDGET {
        return;
    }
    let Some((first, rest)) = items.split_first() else {
        if ci == children.len() {
            out.push(b);
        }
        return;
    };
    match first {
        PItem::Gap(name) => {
            // a trailing gap takes whatever is left
            let lo = if rest.is_empty() { children.len() } else { ci };
            for end in lo..=children.len() {
                let mut b2 = b.clone();
                if let Some(n) = name {
                    b2.gaps.insert(n.clone(), (parent.to_vec(), ci, end));
                }
                match_seq(rest, children, end, parent, b2, out);
            }
        }
        PItem::Node(p) => {
            let Some(child) = children.get(ci) else { return };
            let mut path = parent.to_vec();
            path.push(ci);
            let mut sub = Vec::new();
            match_node(p, child, path, b, &mut sub);
            for s in sub {
                match_seq(rest, children, ci + 1, parent, s, out);
            }
        }
    }
}

/// All bindings of a pattern rooted at `t`, shorter gaps first.
pub fn matches(p: &PNode, t: &TreeNode) -> Vec<Binding> {
    let mut out = Vec::new();
    match_node(p, t, Vec::new(), Binding::default(), &mut out);
    out
}

fn field_value(r: &NodeRef, root: &TreeNode, b: &Binding) -> Option<String> {
    let node = root.at(&b.nodes[&r.node])?;
    match &r.field {
        Field::Var(v) => node.deco.get(v).map(|v| match v {
            Value::Atom(a) => a.clone(),
            Value::Set(_) => v.to_string(),
        }),
        Field::N => node.unl.map(|n| n.0.to_string()),
        Field::I => node.umc.map(|i| i.to_string()),
    }
}

fn guard_holds(g: &Guard, root: &TreeNode, b: &Binding) -> bool {
    match g {
        Guard::And(x, y) => guard_holds(x, root, b) && guard_holds(y, root, b),
        Guard::Or(x, y) => guard_holds(x, root, b) || guard_holds(y, root, b),
        Guard::Not(x) => !guard_holds(x, root, b),
        Guard::Defined(r) => field_value(r, root, b).is_some(),
        Guard::Cmp(r, op, rhs) => {
            if let (CmpOp::Has | CmpOp::HasNot, Field::Var(v), Operand::Lit(l)) = (op, &r.field, rhs) {
                let has = root.at(&b.nodes[&r.node]).is_some_and(|n| n.deco.has(v, l));
                return (*op == CmpOp::Has) == has;
            }
            let lhs = field_value(r, root, b);
            let rhs = match rhs {
                Operand::Lit(l) => Some(l.clone()),
                Operand::Ref(o) => field_value(o, root, b),
            };
            let eq = lhs.is_some() && lhs == rhs;
            match op {
                CmpOp::Eq => eq,
                CmpOp::Neq => !eq,
                CmpOp::Has | CmpOp::HasNot => false,
            }
        }
    }
}

/// First binding at this position that passes the guard.
pub fn find_match(rule: &Rule, t: &TreeNode) -> Option<Binding> {
    matches(&rule.pattern, t)
        .into_iter()
        .find(|b| rule.guard.as_ref().is_none_or(|g| guard_holds(g, t, b)))
}

fn apply_assigns(node: &mut TreeNode, assigns: &[Assign], root: &TreeNode, b: &Binding, schema: &Schema) {
    for a in assigns {
        match a {
            Assign::Set(v, val) => node.deco.put(v, Some(val.clone())),
            Assign::Add(v, x) => node.deco.add(v, x.clone()),
            Assign::Remove(v, x) => node.deco.remove(v, x),
            Assign::Unset(v) => node.deco.unset(v),
            Assign::Format(f) => {
                for (k, val) in &schema.formats[f].0 {
                    node.deco.put(k, Some(val.clone()));
                }
            }
            Assign::Copy { var, node: src, from } => {
                let val = root.at(&b.nodes[src]).and_then(|n| n.deco.get(from)).cloned();
                let val = match (schema.kind(var), val) {
                    (Some(VarKind::Str), Some(Value::Set(vs))) => Some(Value::Atom(vs.into_iter().collect::<Vec<_>>().join(","))),
                    (_, v) => v,
                };
                node.deco.put(var, val);
            }
        }
    }
}

struct Build<'a> {
    root: &'a TreeNode,
    b: &'a Binding,
    schema: &'a Schema,
    tree_next: &'a mut u32,
}

impl Build<'_> {
    fn node(&mut self, t: &TNode, inherited: Option<NodeId>) -> TreeNode {
        let mut node = match &t.kind {
            TKind::Bound(v) => self.root.at(&self.b.nodes[v]).expect("bound path").clone(),
            TKind::New => {
                let key = *self.tree_next;
                *self.tree_next += 1;
                let mut n = TreeNode::new(key, inherited, Decoration::new());
                n.created = true;
                n
            }
        };
        apply_assigns(&mut node, &t.assigns, self.root, self.b, self.schema);
        if let Some(items) = &t.children {
            let n = node.unl;
            node.children = items.iter().flat_map(|i| self.item(i, n)).collect();
        }
        node
    }

    fn item(&mut self, i: &TItem, inherited: Option<NodeId>) -> Vec<TreeNode> {
        match i {
            TItem::Node(t) => vec![self.node(t, inherited)],
            TItem::Gap(g) => {
                let (parent, s, e) = &self.b.gaps[g];
                self.root.at(parent).expect("gap parent").children[*s..*e].to_vec()
            }
        }
    }
}

fn first_original(n: &TreeNode) -> Option<u32> {
    n.walk().find(|x| !x.created).map(|x| x.key)
}

/// Rewrite the subtree at `path` with `rule` under binding `b`.
pub fn apply_at(tree: &mut Tree, path: &[usize], rule: &Rule, b: &Binding, schema: &Schema) -> Result<(), RewriteError> {
    let root = tree.root.at(path).expect("match path").clone();
    for d in &rule.drops {
        if let Some(key) = root.at(&b.nodes[d]).and_then(first_original) {
            return Err(RewriteError::TacticalDeletion {
                rule: rule.name.clone(),
                key,
            });
        }
    }
    let mut next = tree.next_key;
    let new = Build {
        root: &root,
        b,
        schema,
        tree_next: &mut next,
    }
    .node(&rule.template, root.unl);
    tree.next_key = next;
    *tree.root.at_mut(path).expect("match path") = new;
    Ok(())
}

fn bfs_paths(root: &TreeNode) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut i = 0;
    while i < out.len() {
        let p = out[i].clone();
        let n = root.at(&p).expect("path").children.len();
        for c in 0..n {
            let mut q = p.clone();
            q.push(c);
            out.push(q);
        }
        i += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rule: String,
    /// Key of the node the rule was applied at.
    pub key: u32,
}

/// Apply rules until none matches: highest priority first, then the
/// shallowest position, then the leftmost.
pub fn run_grammar(g: &Grammar, tree: &mut Tree, schema: &Schema) -> Result<Vec<Step>, RewriteError> {
    let mut steps = Vec::new();
    loop {
        let paths = bfs_paths(&tree.root);
        let hit = g.rules.iter().find_map(|r| {
            paths.iter().find_map(|p| {
                let t = tree.root.at(p).expect("path");
                find_match(r, t).map(|b| (r, p.clone(), b, t.key))
            })
        });
        let Some((rule, path, b, key)) = hit else {
            return Ok(steps);
        };
        if steps.len() >= g.max_iterations {
            return Err(RewriteError::IterationLimit {
                grammar: g.name.clone(),
                limit: g.max_iterations,
                rule: rule.name.clone(),
            });
        }
        apply_at(tree, &path, rule, &b, schema)?;
        steps.push(Step { rule: rule.name.clone(), key });
    }
}

#[cfg(test)]
mod tests {
    use super::super::compile::compile_grammar;
    use super::*;

    const DV: &str = "-EXC-\nCAT (N, V, D).\nNUM (SG, PL).\nFS (SUJ, OBJ).\nMARK (YES).\n-NEX-\nUATT (def, pl).\n-STR-\nLEMMA.\n-FMT-\nART == CAT=D, LEMMA=le.";

    fn schema() -> Schema {
        Schema::parse(DV).unwrap()
    }

    fn leaf(key: u32, n: u32, kv: &[(&str, &str)]) -> TreeNode {
        let mut d = Decoration::new();
        for (k, v) in kv {
            d.set_atom(k, *v);
        }
        TreeNode::new(key, Some(NodeId(n)), d)
    }

    /// manger(chat{SUJ}, souris{OBJ})
    fn sample() -> Tree {
        let mut v = leaf(0, 1, &[("CAT", "V"), ("LEMMA", "manger")]);
        let mut s = leaf(1, 2, &[("CAT", "N"), ("FS", "SUJ"), ("NUM", "PL"), ("LEMMA", "chat")]);
        s.deco.add("UATT", "def");
        v.children = vec![s, leaf(2, 3, &[("CAT", "N"), ("FS", "OBJ"), ("LEMMA", "souris")])];
        Tree::new(v)
    }

    fn run(rules: &str, tree: &mut Tree) -> Result<Vec<Step>, RewriteError> {
        let g = compile_grammar("t", rules, &schema())?;
        run_grammar(&g, tree, &schema())
    }

    #[test]
    fn agreement_copies_from_subject() {
        let mut t = sample();
        let steps = run(
            "RULE agree PRIORITY 1 : ?v{CAT=V, !NUM}(*a, ?s{FS=SUJ}, *b) ==> ?v{NUM=?s.NUM}(*a, ?s, *b) WHERE defined(?s.NUM).",
            &mut t,
        )
        .unwrap();
        assert_eq!(steps, vec![Step { rule: "agree".into(), key: 0 }]);
        assert_eq!(t.root.deco.atom("NUM"), Some("PL"));
    }

    #[test]
    fn new_nodes_inherit_the_governor_index() {
        let mut t = sample();
        run(
            "RULE art PRIORITY 1 : ?n{CAT=N, UATT~def, !MARK} ==> NEW{@ART}(?n{MARK=YES}).",
            &mut t,
        )
        .unwrap();
        let art = &t.root.children[0];
        assert!(art.created);
        assert_eq!(art.unl, Some(NodeId(2)));
        assert_eq!(art.deco.atom("LEMMA"), Some("le"));
        assert_eq!(art.children[0].deco.atom("MARK"), Some("YES"));
        assert_eq!(art.key, 3);
        assert_eq!(t.size(), 4);
    }

    #[test]
    fn priority_then_shallowest_then_leftmost() {
        let mut t = sample();
        let steps = run(
            "RULE low PRIORITY 1 : ?x{!MARK} ==> ?x{MARK=YES}.\nRULE high PRIORITY 5 : ?x{CAT=N, !MARK} ==> ?x{MARK=YES}.",
            &mut t,
        )
        .unwrap();
        let order: Vec<_> = steps.iter().map(|s| (s.rule.as_str(), s.key)).collect();
        assert_eq!(order, vec![("high", 1), ("high", 2), ("low", 0)]);
    }

    #[test]
    fn reorder_with_gaps() {
        let mut t = sample();
        run("RULE swap PRIORITY 1 : ?v{CAT=V, !MARK}(?a, ?b) ==> ?v{MARK=YES}(?b, ?a).", &mut t).unwrap();
        let keys: Vec<u32> = t.root.children.iter().map(|c| c.key).collect();
        assert_eq!(keys, vec![2, 1]);
    }

    #[test]
    fn iteration_limit() {
        let mut t = sample();
        let err = run("MAXITER 7\nRULE loop PRIORITY 1 : ?x{CAT=V}(*a) ==> ?x(*a, NEW{CAT=D}).", &mut t).unwrap_err();
        assert!(matches!(err, RewriteError::IterationLimit { limit: 7, ref rule, .. } if rule == "loop"));
    }

    #[test]
    fn dropping_source_nodes_is_refused() {
        let mut t = sample();
        let err = run("RULE del PRIORITY 1 : ?v(?a, *b) ==> ?v(*b) DROP ?a.", &mut t).unwrap_err();
        assert!(matches!(err, RewriteError::TacticalDeletion { key: 1, .. }));
        let mut t = sample();
        run(
            "RULE add PRIORITY 2 : ?v{CAT=V, !MARK}(*a) ==> ?v{MARK=YES}(NEW{CAT=D}, *a).\n\
             RULE del PRIORITY 1 : ?v(?d{CAT=D}, *b) ==> ?v(*b) DROP ?d.",
            &mut t,
        )
        .unwrap();
        assert_eq!(t.root.children.len(), 2);
    }

    #[test]
    fn compile_time_errors() {
        let s = schema();
        let bad = [
            "RULE r PRIORITY 1 : ?x{GENDER=F} ==> ?x.",
            "RULE r PRIORITY 1 : ?x{CAT=ADJ} ==> ?x.",
            "RULE r PRIORITY 1 : ?x{UATT=def} ==> ?x.",
            "RULE r PRIORITY 1 : ?x(?y) ==> ?x(?y, ?z).",
            "RULE r PRIORITY 1 : ?x(?y) ==> ?x().",
            "RULE r PRIORITY 1 : ?x(?y, ...) ==> ?x(?y).",
            "RULE r PRIORITY 1 : ?x ==> ?x(NEW).",
            "RULE r PRIORITY 1 : ?x(?y) ==> ?x(?y, ?y).",
            "RULE r PRIORITY 1 : ?x ==> ?x{NUM=?x.CAT}.",
            "RULE r PRIORITY 1 : ?x ==> ?x{LEMMA+=a}.",
            "RULE r PRIORITY 1 : ?x ==> ?x WHERE ?y.CAT = N.",
        ];
        for b in bad {
            assert!(matches!(compile_grammar("t", b, &s), Err(RewriteError::Type { .. })), "{b}");
        }
        assert!(matches!(
            compile_grammar("t", "RULE r PRIORITY : ?x ==> ?x.", &s),
            Err(RewriteError::Syntax { line: 1, .. })
        ));
        assert!(compile_grammar("t", "RULE r PRIORITY 1 : ?x{CAT=N|V}(..., ?y) ==> ?x{LEMMA=?y.CAT}.", &s).is_ok());
    }
}
