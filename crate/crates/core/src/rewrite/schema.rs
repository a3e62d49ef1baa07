//! Variable schema: exclusive, non-exclusive and string variables, plus
//! named formats.
//!
//! ```text
//! -EXC- ** exclusive
//! VSYNTE == (PSYNTE (
//!   CAT (N, V, A, D),
//!   K (PHVB, GN))
//!   ,RSYNTE (FS (SUJ, OBJ1))).
//! -NEX-
//! UATT (def, pl, past).
//! -STR-
//! UL, LEMMA.
//! -FMT-
//! FNPL == CAT=N, NUM=PL.
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, Cursor, Pos, Tok};
use super::RewriteError;
use crate::tree::{Decoration, Tree, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Exclusive(BTreeSet<String>),
    NonExclusive(BTreeSet<String>),
    Str,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub vars: BTreeMap<String, VarKind>,
    /// Group name to the variables it contains, outermost groups included.
    pub groups: BTreeMap<String, Vec<String>>,
    pub formats: BTreeMap<String, Decoration>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Exc,
    Nex,
    Str,
    Fmt,
}

fn syntax(pos: Pos, message: impl Into<String>) -> RewriteError {
    RewriteError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn ident(c: &mut Cursor, what: &str) -> Result<String, RewriteError> {
    let pos = c.pos();
    match c.next() {
        Some(Tok::Ident(s)) => Ok(s),
        Some(Tok::Int(i)) => Ok(i.to_string()),
        Some(t) => Err(syntax(pos, format!("expected {what}, found {t}"))),
        None => Err(syntax(pos, format!("expected {what}, found end of input"))),
    }
}

fn value(c: &mut Cursor) -> Result<String, RewriteError> {
    let pos = c.pos();
    match c.next() {
        Some(Tok::Ident(s)) | Some(Tok::Str(s)) => Ok(s),
        Some(Tok::Int(i)) => Ok(i.to_string()),
        Some(t) => Err(syntax(pos, format!("expected a value, found {t}"))),
        None => Err(syntax(pos, "expected a value, found end of input")),
    }
}

fn section_marker(c: &Cursor) -> Option<Section> {
    if c.peek() != Some(&Tok::Minus) {
        return None;
    }
    match c.peek2() {
        Some(Tok::Ident(s)) => match s.as_str() {
            "EXC" => Some(Section::Exc),
            "NEX" => Some(Section::Nex),
            "STR" => Some(Section::Str),
            "FMT" => Some(Section::Fmt),
            _ => None,
        },
        _ => None,
    }
}

impl Schema {
    pub fn load(path: &Path) -> Result<Self, RewriteError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, RewriteError> {
        let toks = tokenize(text).map_err(|(p, m)| syntax(p, m))?;
        let mut c = Cursor::new(toks);
        let mut schema = Schema::default();
        let mut section: Option<Section> = None;
        let mut pending_formats: Vec<(Pos, String, Vec<(String, Vec<String>)>)> = Vec::new();
        while !c.at_end() {
            if let Some(s) = section_marker(&c) {
                c.next();
                c.next();
                if !c.eat(&Tok::Minus) {
                    return Err(syntax(c.pos(), "section marker must end with `-`"));
                }
                section = Some(s);
                continue;
            }
            let pos = c.pos();
            match section {
                None => return Err(syntax(pos, "expected a section marker (-EXC-, -NEX-, -STR-, -FMT-)")),
                Some(Section::Str) => {
                    loop {
                        let name = ident(&mut c, "a variable name")?;
                        schema.declare(pos, &name, VarKind::Str)?;
                        if !c.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    c.eat(&Tok::Dot);
                }
                Some(Section::Fmt) => {
                    let name = ident(&mut c, "a format name")?;
                    if !c.eat(&Tok::EqEq) {
                        return Err(syntax(c.pos(), "expected `==` after format name"));
                    }
                    let mut assigns = Vec::new();
                    loop {
                        let var = ident(&mut c, "a variable name")?;
                        if !c.eat(&Tok::Eq) {
                            return Err(syntax(c.pos(), "expected `=`"));
                        }
                        let vals = if c.eat(&Tok::LParen) {
                            let mut vs = vec![value(&mut c)?];
                            while c.eat(&Tok::Comma) {
                                vs.push(value(&mut c)?);
                            }
                            if !c.eat(&Tok::RParen) {
                                return Err(syntax(c.pos(), "expected `)`"));
                            }
                            vs
                        } else {
                            vec![value(&mut c)?]
                        };
                        assigns.push((var, vals));
                        if !c.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    c.eat(&Tok::Dot);
                    pending_formats.push((pos, name, assigns));
                }
                Some(s) => {
                    let nex = s == Section::Nex;
                    let name = ident(&mut c, "a variable or group name")?;
                    if c.eat(&Tok::EqEq) {
                        if !c.eat(&Tok::LParen) {
                            return Err(syntax(c.pos(), "expected `(` after `==`"));
                        }
                        let members = schema.items(&mut c, nex)?;
                        if !c.eat(&Tok::RParen) {
                            return Err(syntax(c.pos(), "expected `)` closing the group"));
                        }
                        schema.groups.insert(name, members);
                    } else {
                        schema.item_body(&mut c, pos, name, nex)?;
                    }
                    c.eat(&Tok::Dot);
                }
            }
        }
        for (pos, name, assigns) in pending_formats {
            let mut d = Decoration::new();
            for (var, vals) in assigns {
                let kind = schema
                    .vars
                    .get(&var)
                    .ok_or_else(|| RewriteError::Type {
                        line: pos.line,
                        col: pos.col,
                        message: format!("format `{name}` uses undeclared variable `{var}`"),
                    })?;
                let v = match kind {
                    VarKind::NonExclusive(_) => Value::Set(vals.into_iter().collect()),
                    _ if vals.len() == 1 => Value::Atom(vals.into_iter().next().unwrap()),
                    _ => {
                        return Err(RewriteError::Type {
                            line: pos.line,
                            col: pos.col,
                            message: format!("`{var}` takes a single value"),
                        })
                    }
                };
                schema.check_value(&var, &v).map_err(|m| RewriteError::Type {
                    line: pos.line,
                    col: pos.col,
                    message: format!("format `{name}`: {m}"),
                })?;
                d.put(&var, Some(v));
            }
            if schema.formats.insert(name.clone(), d).is_some() {
                return Err(syntax(pos, format!("format `{name}` declared twice")));
            }
        }
        Ok(schema)
    }

    fn declare(&mut self, pos: Pos, name: &str, kind: VarKind) -> Result<(), RewriteError> {
        if self.vars.insert(name.to_string(), kind).is_some() {
            return Err(RewriteError::Type {
                line: pos.line,
                col: pos.col,
                message: format!("variable `{name}` declared twice"),
            });
        }
        Ok(())
    }

    /// Items inside a group: `NAME (...)` separated by optional commas.
    /// Returns the variables declared, transitively.
    fn items(&mut self, c: &mut Cursor, nex: bool) -> Result<Vec<String>, RewriteError> {
        let mut vars = Vec::new();
        loop {
            c.eat(&Tok::Comma);
            if matches!(c.peek(), Some(Tok::RParen) | None) {
                return Ok(vars);
            }
            let pos = c.pos();
            let name = ident(c, "a variable or group name")?;
            vars.extend(self.item_body(c, pos, name, nex)?);
        }
    }

    fn item_body(&mut self, c: &mut Cursor, pos: Pos, name: String, nex: bool) -> Result<Vec<String>, RewriteError> {
        if !c.eat(&Tok::LParen) {
            return Err(syntax(c.pos(), format!("expected `(` after `{name}`")));
        }
        // a group holds `NAME (`, a variable holds plain values
        let is_group = matches!(c.peek(), Some(Tok::Ident(_))) && c.peek2() == Some(&Tok::LParen)
            || c.peek() == Some(&Tok::Comma);
        let out = if is_group {
            let members = self.items(c, nex)?;
            self.groups.insert(name, members.clone());
            members
        } else {
            let mut values = BTreeSet::new();
            loop {
                let v = ident(c, "a value")?;
                values.insert(v);
                if !c.eat(&Tok::Comma) {
                    break;
                }
            }
            let kind = if nex {
                VarKind::NonExclusive(values)
            } else {
                VarKind::Exclusive(values)
            };
            self.declare(pos, &name, kind)?;
            vec![name]
        };
        if !c.eat(&Tok::RParen) {
            return Err(syntax(c.pos(), "expected `)`"));
        }
        Ok(out)
    }

    pub fn kind(&self, var: &str) -> Option<&VarKind> {
        self.vars.get(var)
    }

    /// Check one value against its variable's declaration.
    pub fn check_value(&self, var: &str, v: &Value) -> Result<(), String> {
        match (self.vars.get(var), v) {
            (None, _) => Err(format!("undeclared variable `{var}`")),
            (Some(VarKind::Str), Value::Atom(_)) => Ok(()),
            (Some(VarKind::Exclusive(set)), Value::Atom(a)) => {
                if set.contains(a) {
                    Ok(())
                } else {
                    Err(format!("`{a}` is not a value of `{var}`"))
                }
            }
            (Some(VarKind::NonExclusive(set)), Value::Set(vs)) => match vs.iter().find(|x| !set.contains(*x)) {
                None => Ok(()),
                Some(x) => Err(format!("`{x}` is not a value of `{var}`")),
            },
            (Some(VarKind::NonExclusive(_)), Value::Atom(_)) => Err(format!("`{var}` is non-exclusive and needs a set")),
            (Some(_), Value::Set(_)) => Err(format!("`{var}` holds a single value")),
        }
    }

    pub fn check_decoration(&self, d: &Decoration) -> Result<(), String> {
        d.0.iter().try_for_each(|(k, v)| self.check_value(k, v))
    }

    /// Type-check every decoration of a tree.
    pub fn check_tree(&self, tree: &Tree) -> Result<(), RewriteError> {
        for n in tree.root.walk() {
            self.check_decoration(&n.deco)
                .map_err(|message| RewriteError::Schema { key: n.key, message })?;
        }
        Ok(())
    }
}
