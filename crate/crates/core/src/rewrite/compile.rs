//! Rule-file parser and type checker.
//!
//! ```text
//! GRAMMAR gs2
//! MAXITER 500
//! RULE agree PRIORITY 90 :
//!     ?v{CAT=V, !AGR}(*a, ?s{FS=SUJ}, *b)
//! ==> ?v{AGR=YES, NUM=?s.NUM}(*a, ?s, *b)
//! WHERE defined(?s.NUM).
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, Cursor, Pos, Tok};
use super::schema::{Schema, VarKind};
use super::RewriteError;
use crate::tree::Value;

pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cond {
    Defined(String),
    Undefined(String),
    /// Exclusive or string variable equal to one of the values.
    In(String, Vec<String>),
    NotIn(String, Vec<String>),
    /// Non-exclusive variable containing one of the values.
    Has(String, Vec<String>),
    HasNot(String, Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PNode {
    pub var: String,
    pub conds: Vec<Cond>,
    /// `None`: children unconstrained.
    pub children: Option<Vec<PItem>>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PItem {
    Node(PNode),
    /// Named (`*a`) or anonymous (`...`) run of siblings.
    Gap(Option<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assign {
    Set(String, Value),
    Add(String, String),
    Remove(String, String),
    Unset(String),
    Format(String),
    Copy { var: String, node: String, from: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TKind {
    Bound(String),
    New,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TNode {
    pub kind: TKind,
    pub assigns: Vec<Assign>,
    /// `None`: a bound node keeps its current children.
    pub children: Option<Vec<TItem>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TItem {
    Node(TNode),
    Gap(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Var(String),
    /// Tactical UNL index.
    N,
    /// Tactical UMC index.
    I,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRef {
    pub node: String,
    pub field: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Neq,
    Has,
    HasNot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operand {
    Lit(String),
    Ref(NodeRef),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Guard {
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Not(Box<Guard>),
    Defined(NodeRef),
    Cmp(NodeRef, CmpOp, Operand),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub priority: i64,
    pub pattern: PNode,
    pub template: TNode,
    /// Bound nodes removed by the rule (only rule-created subtrees may go).
    pub drops: Vec<String>,
    pub guard: Option<Guard>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grammar {
    pub name: String,
    /// Highest priority first; equal priorities keep file order.
    pub rules: Vec<Rule>,
    pub max_iterations: usize,
}

impl Grammar {
    pub fn empty(name: &str) -> Self {
        Grammar {
            name: name.to_string(),
            rules: Vec::new(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> RewriteError {
    RewriteError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn type_err(pos: Pos, message: impl Into<String>) -> RewriteError {
    RewriteError::Type {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

struct Parser<'s> {
    c: Cursor,
    schema: &'s Schema,
}

impl Parser<'_> {
    fn expect(&mut self, t: Tok) -> Result<(), RewriteError> {
        let pos = self.c.pos();
        match self.c.next() {
            Some(got) if got == t => Ok(()),
            Some(got) => Err(syntax(pos, format!("expected {t}, found {got}"))),
            None => Err(syntax(pos, format!("expected {t}, found end of input"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, RewriteError> {
        let pos = self.c.pos();
        match self.c.next() {
            Some(Tok::Ident(s)) => Ok(s),
            Some(t) => Err(syntax(pos, format!("expected {what}, found {t}"))),
            None => Err(syntax(pos, format!("expected {what}, found end of input"))),
        }
    }

    fn value(&mut self) -> Result<String, RewriteError> {
        let pos = self.c.pos();
        match self.c.next() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => Ok(s),
            Some(Tok::Int(i)) => Ok(i.to_string()),
            Some(t) => Err(syntax(pos, format!("expected a value, found {t}"))),
            None => Err(syntax(pos, "expected a value, found end of input")),
        }
    }

    fn values(&mut self) -> Result<Vec<String>, RewriteError> {
        let mut vs = vec![self.value()?];
        while self.c.eat(&Tok::Pipe) {
            vs.push(self.value()?);
        }
        Ok(vs)
    }

    fn kind(&self, pos: Pos, var: &str) -> Result<&VarKind, RewriteError> {
        self.schema
            .kind(var)
            .ok_or_else(|| type_err(pos, format!("undeclared variable `{var}`")))
    }

    fn check_values(&self, pos: Pos, var: &str, vals: &[String], want_nex: bool) -> Result<(), RewriteError> {
        let kind = self.kind(pos, var)?;
        match (kind, want_nex) {
            (VarKind::NonExclusive(set), true) | (VarKind::Exclusive(set), false) => {
                if let Some(bad) = vals.iter().find(|v| !set.contains(*v)) {
                    return Err(type_err(pos, format!("`{bad}` is not a value of `{var}`")));
                }
                Ok(())
            }
            (VarKind::Str, false) => Ok(()),
            (VarKind::NonExclusive(_), false) => Err(type_err(pos, format!("`{var}` is non-exclusive: use `~` / `+=`"))),
            (_, true) => Err(type_err(pos, format!("`{var}` is not non-exclusive"))),
        }
    }

    fn rule(&mut self) -> Result<Rule, RewriteError> {
        let line = self.c.pos().line;
        let pos = self.c.pos();
        let name = match self.c.next() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => s,
            _ => return Err(syntax(pos, "expected a rule name")),
        };
        if !self.c.eat_keyword("PRIORITY") {
            return Err(syntax(self.c.pos(), "expected `PRIORITY`"));
        }
        let pos = self.c.pos();
        let priority = match self.c.next() {
            Some(Tok::Int(i)) => i,
            _ => return Err(syntax(pos, "expected an integer priority")),
        };
        self.expect(Tok::Colon)?;
        let pattern = self.pnode()?;
        self.expect(Tok::Arrow)?;
        let template = self.tnode()?;
        let mut drops = Vec::new();
        if self.c.eat_keyword("DROP") {
            loop {
                let pos = self.c.pos();
                match self.c.next() {
                    Some(Tok::Var(v)) => drops.push(v),
                    _ => return Err(syntax(pos, "expected `?var` after DROP")),
                }
                if !self.c.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let guard = if self.c.eat_keyword("WHERE") {
            Some(self.guard_or()?)
        } else {
            None
        };
        self.c.eat(&Tok::Dot);
        let rule = Rule {
            name,
            priority,
            pattern,
            template,
            drops,
            guard,
            line,
        };
        check_rule(&rule, self.schema)?;
        Ok(rule)
    }

    fn pnode(&mut self) -> Result<PNode, RewriteError> {
        let pos = self.c.pos();
        let var = match self.c.next() {
            Some(Tok::Var(v)) => v,
            Some(t) => return Err(syntax(pos, format!("expected a pattern node `?x`, found {t}"))),
            None => return Err(syntax(pos, "expected a pattern node")),
        };
        let mut conds = Vec::new();
        if self.c.eat(&Tok::LBrace) {
            if !self.c.eat(&Tok::RBrace) {
                loop {
                    conds.push(self.cond()?);
                    if self.c.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
        }
        let children = if self.c.eat(&Tok::LParen) {
            let mut items = Vec::new();
            if !self.c.eat(&Tok::RParen) {
                loop {
                    let item = match self.c.peek() {
                        Some(Tok::Gap(_)) => match self.c.next() {
                            Some(Tok::Gap(g)) => PItem::Gap(Some(g)),
                            _ => unreachable!(),
                        },
                        Some(Tok::Ellipsis) => {
                            self.c.next();
                            PItem::Gap(None)
                        }
                        _ => PItem::Node(self.pnode()?),
                    };
                    items.push(item);
                    if self.c.eat(&Tok::RParen) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
            Some(items)
        } else {
            None
        };
        Ok(PNode {
            var,
            conds,
            children,
            line: pos.line,
        })
    }

    fn cond(&mut self) -> Result<Cond, RewriteError> {
        let pos = self.c.pos();
        if self.c.eat(&Tok::Bang) {
            let v = self.ident("a variable name")?;
            self.kind(pos, &v)?;
            return Ok(Cond::Undefined(v));
        }
        let var = self.ident("a variable name")?;
        let cond = match self.c.peek() {
            Some(Tok::Eq) | Some(Tok::Neq) => {
                let neg = self.c.next() == Some(Tok::Neq);
                let vals = self.values()?;
                self.check_values(pos, &var, &vals, false)?;
                if neg {
                    Cond::NotIn(var, vals)
                } else {
                    Cond::In(var, vals)
                }
            }
            Some(Tok::Tilde) | Some(Tok::NotTilde) => {
                let neg = self.c.next() == Some(Tok::NotTilde);
                let vals = self.values()?;
                self.check_values(pos, &var, &vals, true)?;
                if neg {
                    Cond::HasNot(var, vals)
                } else {
                    Cond::Has(var, vals)
                }
            }
            _ => {
                self.kind(pos, &var)?;
                Cond::Defined(var)
            }
        };
        Ok(cond)
    }

    fn tnode(&mut self) -> Result<TNode, RewriteError> {
        let pos = self.c.pos();
        let kind = match self.c.next() {
            Some(Tok::Var(v)) => TKind::Bound(v),
            Some(Tok::Ident(s)) if s == "NEW" => TKind::New,
            Some(t) => return Err(syntax(pos, format!("expected `?x` or `NEW`, found {t}"))),
            None => return Err(syntax(pos, "expected a template node")),
        };
        let mut assigns = Vec::new();
        if self.c.eat(&Tok::LBrace) && !self.c.eat(&Tok::RBrace) {
            loop {
                assigns.push(self.assign()?);
                if self.c.eat(&Tok::RBrace) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        let children = if self.c.eat(&Tok::LParen) {
            let mut items = Vec::new();
            if !self.c.eat(&Tok::RParen) {
                loop {
                    let item = match self.c.peek() {
                        Some(Tok::Gap(_)) => match self.c.next() {
                            Some(Tok::Gap(g)) => TItem::Gap(g),
                            _ => unreachable!(),
                        },
                        Some(Tok::Ellipsis) => {
                            return Err(syntax(self.c.pos(), "anonymous gaps cannot appear in a template"));
                        }
                        _ => TItem::Node(self.tnode()?),
                    };
                    items.push(item);
                    if self.c.eat(&Tok::RParen) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
            Some(items)
        } else {
            None
        };
        Ok(TNode { kind, assigns, children })
    }

    fn assign(&mut self) -> Result<Assign, RewriteError> {
        let pos = self.c.pos();
        if self.c.eat(&Tok::Minus) {
            let v = self.ident("a variable name")?;
            self.kind(pos, &v)?;
            return Ok(Assign::Unset(v));
        }
        if self.c.eat(&Tok::At) {
            let f = self.ident("a format name")?;
            if !self.schema.formats.contains_key(&f) {
                return Err(type_err(pos, format!("unknown format `{f}`")));
            }
            return Ok(Assign::Format(f));
        }
        let var = self.ident("a variable name")?;
        let kind = self.kind(pos, &var)?.clone();
        match self.c.next() {
            Some(Tok::Eq) => {
                if let Some(Tok::Var(_)) = self.c.peek() {
                    let Some(Tok::Var(node)) = self.c.next() else { unreachable!() };
                    self.expect(Tok::Dot)?;
                    let from = self.ident("a variable name")?;
                    let src = self.kind(pos, &from)?;
                    let ok = match (&kind, src) {
                        (VarKind::Str, VarKind::Str | VarKind::Exclusive(_)) => true,
                        (VarKind::Exclusive(t), VarKind::Exclusive(s)) | (VarKind::NonExclusive(t), VarKind::NonExclusive(s)) => {
                            s.is_subset(t)
                        }
                        _ => false,
                    };
                    if !ok {
                        return Err(type_err(pos, format!("cannot copy `{from}` into `{var}`: incompatible value sets")));
                    }
                    return Ok(Assign::Copy { var, node, from });
                }
                let value = if self.c.eat(&Tok::LParen) {
                    let mut vs = vec![self.value()?];
                    while self.c.eat(&Tok::Comma) {
                        vs.push(self.value()?);
                    }
                    self.expect(Tok::RParen)?;
                    self.check_values(pos, &var, &vs, true)?;
                    Value::Set(vs.into_iter().collect())
                } else {
                    let v = self.value()?;
                    if matches!(kind, VarKind::NonExclusive(_)) {
                        self.check_values(pos, &var, std::slice::from_ref(&v), true)?;
                        Value::Set(BTreeSet::from([v]))
                    } else {
                        self.check_values(pos, &var, std::slice::from_ref(&v), false)?;
                        Value::Atom(v)
                    }
                };
                Ok(Assign::Set(var, value))
            }
            Some(op @ (Tok::PlusEq | Tok::MinusEq)) => {
                let add = op == Tok::PlusEq;
                let v = self.value()?;
                self.check_values(pos, &var, std::slice::from_ref(&v), true)?;
                Ok(if add { Assign::Add(var, v) } else { Assign::Remove(var, v) })
            }
            _ => Err(syntax(pos, format!("expected `=`, `+=` or `-=` after `{var}`"))),
        }
    }

    fn guard_or(&mut self) -> Result<Guard, RewriteError> {
        let mut g = self.guard_and()?;
        while self.c.eat_keyword("or") {
            g = Guard::Or(Box::new(g), Box::new(self.guard_and()?));
        }
        Ok(g)
    }

    fn guard_and(&mut self) -> Result<Guard, RewriteError> {
        let mut g = self.guard_unary()?;
        while self.c.eat_keyword("and") {
            g = Guard::And(Box::new(g), Box::new(self.guard_unary()?));
        }
        Ok(g)
    }

    fn guard_unary(&mut self) -> Result<Guard, RewriteError> {
        if self.c.eat_keyword("not") {
            return Ok(Guard::Not(Box::new(self.guard_unary()?)));
        }
        if self.c.eat(&Tok::LParen) {
            let g = self.guard_or()?;
            self.expect(Tok::RParen)?;
            return Ok(g);
        }
        if self.c.eat_keyword("defined") {
            self.expect(Tok::LParen)?;
            let r = self.node_ref()?;
            self.expect(Tok::RParen)?;
            return Ok(Guard::Defined(r));
        }
        let pos = self.c.pos();
        let r = self.node_ref()?;
        let op = match self.c.next() {
            Some(Tok::Eq) => CmpOp::Eq,
            Some(Tok::Neq) => CmpOp::Neq,
            Some(Tok::Tilde) => CmpOp::Has,
            Some(Tok::NotTilde) => CmpOp::HasNot,
            _ => return Err(syntax(pos, "expected a comparison operator")),
        };
        let rhs = if let Some(Tok::Var(_)) = self.c.peek() {
            Operand::Ref(self.node_ref()?)
        } else {
            Operand::Lit(self.value()?)
        };
        match (&r.field, op, &rhs) {
            (Field::Var(v), CmpOp::Has | CmpOp::HasNot, Operand::Lit(l)) => {
                self.check_values(pos, v, std::slice::from_ref(l), true)?
            }
            (_, CmpOp::Has | CmpOp::HasNot, _) => return Err(type_err(pos, "`~` needs a non-exclusive variable and a value")),
            (Field::Var(v), _, Operand::Lit(l)) => self.check_values(pos, v, std::slice::from_ref(l), false)?,
            (Field::Var(v), _, Operand::Ref(other)) => {
                if matches!(self.kind(pos, v)?, VarKind::NonExclusive(_)) {
                    return Err(type_err(pos, format!("`{v}` is non-exclusive")));
                }
                if let Field::Var(w) = &other.field {
                    if matches!(self.kind(pos, w)?, VarKind::NonExclusive(_)) {
                        return Err(type_err(pos, format!("`{w}` is non-exclusive")));
                    }
                }
            }
            (Field::N | Field::I, _, Operand::Lit(l)) if l.parse::<u32>().is_err() => {
                return Err(type_err(pos, "tactical indices compare with integers"))
            }
            _ => {}
        }
        Ok(Guard::Cmp(r, op, rhs))
    }

    fn node_ref(&mut self) -> Result<NodeRef, RewriteError> {
        let pos = self.c.pos();
        let node = match self.c.next() {
            Some(Tok::Var(v)) => v,
            _ => return Err(syntax(pos, "expected `?x.VAR`")),
        };
        self.expect(Tok::Dot)?;
        let field = if self.c.eat(&Tok::Hash) {
            match self.ident("`n` or `i`")?.as_str() {
                "n" => Field::N,
                "i" => Field::I,
                other => return Err(syntax(pos, format!("unknown tactical variable `#{other}`"))),
            }
        } else {
            let v = self.ident("a variable name")?;
            self.kind(pos, &v)?;
            Field::Var(v)
        };
        Ok(NodeRef { node, field })
    }
}

fn pattern_vars(p: &PNode, out: &mut Vec<(String, bool)>) {
    out.push((p.var.clone(), false));
    for item in p.children.iter().flatten() {
        match item {
            PItem::Node(c) => pattern_vars(c, out),
            PItem::Gap(Some(g)) => out.push((g.clone(), true)),
            PItem::Gap(None) => {}
        }
    }
}

fn find_pnode<'a>(p: &'a PNode, var: &str) -> Option<&'a PNode> {
    if p.var == var {
        return Some(p);
    }
    p.children.iter().flatten().find_map(|i| match i {
        PItem::Node(c) => find_pnode(c, var),
        PItem::Gap(_) => None,
    })
}

/// Everything below a pattern node: nested vars and named gaps.
fn below(p: &PNode) -> Vec<(String, bool)> {
    let mut v = Vec::new();
    pattern_vars(p, &mut v);
    v.remove(0);
    v
}

fn check_rule(rule: &Rule, schema: &Schema) -> Result<(), RewriteError> {
    let pos = Pos { line: rule.line, col: 1 };
    let err = |m: String| type_err(pos, format!("rule `{}`: {m}", rule.name));
    let mut declared = Vec::new();
    pattern_vars(&rule.pattern, &mut declared);
    let mut seen = BTreeSet::new();
    for (name, gap) in &declared {
        if !seen.insert((name.clone(), *gap)) {
            return Err(err(format!("`{}{name}` bound twice in the pattern", if *gap { "*" } else { "?" })));
        }
    }
    let bound: BTreeMap<(String, bool), ()> = declared.iter().cloned().map(|k| (k, ())).collect();
    let mut used: BTreeSet<(String, bool)> = BTreeSet::new();
    let mut mark = |k: (String, bool), used: &mut BTreeSet<(String, bool)>| -> Result<(), RewriteError> {
        if !bound.contains_key(&k) {
            return Err(err(format!("`{}{}` is not bound by the pattern", if k.1 { "*" } else { "?" }, k.0)));
        }
        if !used.insert(k.clone()) {
            return Err(err(format!("`{}{}` used twice", if k.1 { "*" } else { "?" }, k.0)));
        }
        Ok(())
    };

    fn walk(
        t: &TNode,
        rule: &Rule,
        schema: &Schema,
        used: &mut BTreeSet<(String, bool)>,
        mark: &mut dyn FnMut((String, bool), &mut BTreeSet<(String, bool)>) -> Result<(), RewriteError>,
        err: &dyn Fn(String) -> RewriteError,
    ) -> Result<(), RewriteError> {
        for a in &t.assigns {
            if let Assign::Copy { node, .. } = a {
                if find_pnode(&rule.pattern, node).is_none() {
                    return Err(err(format!("copy source `?{node}` is not bound")));
                }
            }
        }
        let _ = schema;
        match &t.kind {
            TKind::Bound(v) => {
                mark((v.clone(), false), used)?;
                let p = find_pnode(&rule.pattern, v).expect("marked vars are bound");
                match (&t.children, &p.children) {
                    (None, _) => {
                        for k in below(p) {
                            mark(k, used)?;
                        }
                    }
                    (Some(_), None) => {
                        return Err(err(format!("`?{v}` gets a new child list but its pattern does not list its children")));
                    }
                    (Some(_), Some(items)) => {
                        if items.iter().any(|i| matches!(i, PItem::Gap(None))) {
                            return Err(err(format!("children of `?{v}` are re-listed but its pattern has an anonymous gap")));
                        }
                    }
                }
            }
            TKind::New => {}
        }
        for item in t.children.iter().flatten() {
            match item {
                TItem::Gap(g) => mark((g.clone(), true), used)?,
                TItem::Node(c) => walk(c, rule, schema, used, mark, err)?,
            }
        }
        Ok(())
    }
    walk(&rule.template, rule, schema, &mut used, &mut mark, &err)?;
    for d in &rule.drops {
        let p = find_pnode(&rule.pattern, d).ok_or_else(|| err(format!("dropped `?{d}` is not bound")))?;
        mark((d.clone(), false), &mut used)?;
        for k in below(p) {
            mark(k, &mut used)?;
        }
    }
    if let Some((name, gap)) = declared.iter().find(|k| !used.contains(*k)) {
        return Err(err(format!(
            "`{}{name}` is not used in the template (list it, or DROP it)",
            if *gap { "*" } else { "?" }
        )));
    }
    if let Some(g) = &rule.guard {
        check_guard_refs(g, rule).map_err(err)?;
    }
    Ok(())
}

fn check_guard_refs(g: &Guard, rule: &Rule) -> Result<(), String> {
    let check = |r: &NodeRef| {
        if find_pnode(&rule.pattern, &r.node).is_some() {
            Ok(())
        } else {
            Err(format!("guard refers to unbound `?{}`", r.node))
        }
    };
    match g {
        Guard::And(a, b) | Guard::Or(a, b) => {
            check_guard_refs(a, rule)?;
            check_guard_refs(b, rule)
        }
        Guard::Not(a) => check_guard_refs(a, rule),
        Guard::Defined(r) => check(r),
        Guard::Cmp(r, _, o) => {
            check(r)?;
            if let Operand::Ref(o) = o {
                check(o)?;
            }
            Ok(())
        }
    }
}

/// Compile a rule file against a schema.
pub fn compile_grammar(name: &str, text: &str, schema: &Schema) -> Result<Grammar, RewriteError> {
    let toks = tokenize(text).map_err(|(p, m)| syntax(p, m))?;
    let mut p = Parser {
        c: Cursor::new(toks),
        schema,
    };
    let mut g = Grammar::empty(name);
    let mut names = BTreeSet::new();
    while !p.c.at_end() {
        let pos = p.c.pos();
        if p.c.eat_keyword("GRAMMAR") {
            g.name = p.ident("a grammar name")?;
        } else if p.c.eat_keyword("MAXITER") {
            let pos = p.c.pos();
            g.max_iterations = match p.c.next() {
                Some(Tok::Int(i)) if i > 0 => i as usize,
                _ => return Err(syntax(pos, "MAXITER needs a positive integer")),
            };
        } else if p.c.eat_keyword("RULE") {
            let r = p.rule()?;
            if !names.insert(r.name.clone()) {
                return Err(syntax(pos, format!("rule `{}` defined twice", r.name)));
            }
            g.rules.push(r);
        } else {
            let t = p.c.next().expect("not at end");
            return Err(syntax(pos, format!("expected RULE, GRAMMAR or MAXITER, found {t}")));
        }
    }
    // stable: equal priorities keep file order
    g.rules.sort_by(|a, b| b.priority.cmp(&a.priority));
    Ok(g)
}
