//! Morphological and graphemic generation: the UMC leaves, left to right,
//! become surface tokens.
//!
//! A pack is a directory with three files:
//!
//! * `rules.tsv`: `name<TAB>conditions<TAB>stem<TAB>ops`. Conditions are `*`
//!   or a comma list of `VAR=a|b`, `VAR!=a|b`, `VAR` (defined) and `!VAR`.
//!   The stem is `lemma`, `strip:N` (lemma minus N final characters) or
//!   `none`. Ops are space separated: `+ID` appends affix `ID`, `ID+`
//!   prepends it, `~N:ID` replaces the last N characters with it; `-` means
//!   no op. The first rule whose conditions hold realizes the leaf.
//! * `affixes.tsv`: `ID<TAB>string`.
//! * `graphemic.rules`: `name<TAB>left<TAB>right<TAB>action`, where left and
//!   right are regexes matched against whole adjacent tokens and action is
//!   `elide` (drop the left token's last letter, add `'`, glue) or
//!   `contract:TEXT` (merge both tokens into TEXT).

use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{Decoration, Tree, Value};

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("{file} line {line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("{file} line {line}: unknown affix `{id}`")]
    UnknownAffix { file: String, line: usize, id: String },
    #[error("morph rules have no fallback (`*`) rule")]
    NoFallback,
    #[error("no morph rule matches leaf {key} ({lemma})")]
    NoMatchingMorphRule { key: u32, lemma: String },
    #[error("leaf {key} has no LEMMA")]
    MissingLemma { key: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum MCond {
    In(String, Vec<String>),
    NotIn(String, Vec<String>),
    Defined(String),
    Undefined(String),
}

impl MCond {
    fn holds(&self, d: &Decoration) -> bool {
        let is = |var: &str, vals: &[String]| match d.get(var) {
            Some(Value::Atom(a)) => vals.iter().any(|v| v == a),
            Some(Value::Set(s)) => vals.iter().any(|v| s.contains(v)),
            None => false,
        };
        match self {
            MCond::In(v, vals) => is(v, vals),
            MCond::NotIn(v, vals) => !is(v, vals),
            MCond::Defined(v) => d.get(v).is_some(),
            MCond::Undefined(v) => d.get(v).is_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Stem {
    Lemma,
    Strip(usize),
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Op {
    Suffix(String),
    Prefix(String),
    ReplaceEnding(usize, String),
}

#[derive(Debug, Clone)]
struct MorphRule {
    name: String,
    conds: Vec<MCond>,
    stem: Stem,
    ops: Vec<Op>,
}

#[derive(Debug, Clone)]
enum Action {
    Elide,
    Contract(String),
}

#[derive(Debug, Clone)]
struct GraphemicRule {
    left: Regex,
    right: Regex,
    action: Action,
}

#[derive(Debug, Clone)]
pub struct MorphPack {
    rules: Vec<MorphRule>,
    affixes: BTreeMap<String, String>,
    graphemic: Vec<GraphemicRule>,
}

fn rows<'a>(text: &'a str) -> impl Iterator<Item = (usize, Vec<&'a str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim();
        (!t.is_empty() && !t.starts_with('#')).then(|| (i + 1, l.split('\t').map(str::trim).collect()))
    })
}

fn chars_cut(s: &str, n: usize) -> String {
    let count = s.chars().count();
    s.chars().take(count.saturating_sub(n)).collect()
}

impl MorphPack {
    pub fn load_dir(dir: &Path) -> Result<Self, MorphError> {
        let read = |f: &str| std::fs::read_to_string(dir.join(f));
        Self::parse(&read("rules.tsv")?, &read("affixes.tsv")?, &read("graphemic.rules")?)
    }

    pub fn parse(rules: &str, affixes: &str, graphemic: &str) -> Result<Self, MorphError> {
        let fmt = |file: &str, line: usize, message: String| MorphError::Format {
            file: file.into(),
            line,
            message,
        };
        let mut aff = BTreeMap::new();
        for (line, cols) in rows(affixes) {
            if cols.is_empty() || cols.len() > 2 || cols[0].is_empty() {
                return Err(fmt("affixes.tsv", line, "expected `ID<TAB>string`".into()));
            }
            if aff.insert(cols[0].to_string(), cols.get(1).unwrap_or(&"").to_string()).is_some() {
                return Err(fmt("affixes.tsv", line, format!("affix `{}` declared twice", cols[0])));
            }
        }
        let mut out = Vec::new();
        for (line, cols) in rows(rules) {
            if cols.len() != 4 {
                return Err(fmt("rules.tsv", line, "expected 4 tab-separated columns".into()));
            }
            let mut conds = Vec::new();
            if cols[1] != "*" {
                for c in cols[1].split(',').map(str::trim) {
                    let split = |sep: &str| c.split_once(sep).map(|(v, vals)| (v.trim().to_string(), vals.split('|').map(|x| x.trim().to_string()).collect()));
                    conds.push(if let Some((v, vals)) = split("!=") {
                        MCond::NotIn(v, vals)
                    } else if let Some((v, vals)) = split("=") {
                        MCond::In(v, vals)
                    } else if let Some(v) = c.strip_prefix('!') {
                        MCond::Undefined(v.trim().to_string())
                    } else if !c.is_empty() {
                        MCond::Defined(c.to_string())
                    } else {
                        return Err(fmt("rules.tsv", line, "empty condition".into()));
                    });
                }
            }
            let stem = match cols[2] {
                "lemma" => Stem::Lemma,
                "none" => Stem::Empty,
                s => match s.strip_prefix("strip:").and_then(|n| n.parse().ok()) {
                    Some(n) => Stem::Strip(n),
                    None => return Err(fmt("rules.tsv", line, format!("bad stem selector `{s}`"))),
                },
            };
            let affix = |id: &str| {
                aff.get(id).cloned().ok_or_else(|| MorphError::UnknownAffix {
                    file: "rules.tsv".into(),
                    line,
                    id: id.to_string(),
                })
            };
            let mut ops = Vec::new();
            for op in cols[3].split_whitespace().filter(|o| *o != "-") {
                ops.push(if let Some(id) = op.strip_prefix('+') {
                    Op::Suffix(affix(id)?)
                } else if let Some(id) = op.strip_suffix('+') {
                    Op::Prefix(affix(id)?)
                } else if let Some((n, id)) = op.strip_prefix('~').and_then(|r| r.split_once(':')) {
                    let n = n.parse().map_err(|_| fmt("rules.tsv", line, format!("bad op `{op}`")))?;
                    Op::ReplaceEnding(n, affix(id)?)
                } else {
                    return Err(fmt("rules.tsv", line, format!("bad op `{op}`")));
                });
            }
            out.push(MorphRule {
                name: cols[0].to_string(),
                conds,
                stem,
                ops,
            });
        }
        if !out.iter().any(|r| r.conds.is_empty()) {
            return Err(MorphError::NoFallback);
        }
        let mut gr = Vec::new();
        for (line, cols) in rows(graphemic) {
            if cols.len() != 4 {
                return Err(fmt("graphemic.rules", line, "expected `name left right action`".into()));
            }
            let re = |p: &str| Regex::new(&format!("^(?:{p})$")).map_err(|e| fmt("graphemic.rules", line, e.to_string()));
            let action = match cols[3] {
                "elide" => Action::Elide,
                a => match a.strip_prefix("contract:") {
                    Some(t) if !t.is_empty() => Action::Contract(t.to_string()),
                    _ => return Err(fmt("graphemic.rules", line, format!("unknown action `{a}`"))),
                },
            };
            gr.push(GraphemicRule {
                left: re(cols[1])?,
                right: re(cols[2])?,
                action,
            });
        }
        Ok(MorphPack {
            rules: out,
            affixes: aff,
            graphemic: gr,
        })
    }

    /// Surface form of one leaf.
    pub fn inflect(&self, deco: &Decoration) -> Option<(String, &str)> {
        let lemma = deco.atom("LEMMA")?;
        let rule = self.rules.iter().find(|r| r.conds.iter().all(|c| c.holds(deco)))?;
        let mut form = match rule.stem {
            Stem::Lemma => lemma.to_string(),
            Stem::Strip(n) => chars_cut(lemma, n),
            Stem::Empty => String::new(),
        };
        for op in &rule.ops {
            match op {
                Op::Suffix(a) => form.push_str(a),
                Op::Prefix(a) => form.insert_str(0, a),
                Op::ReplaceEnding(n, a) => {
                    form = chars_cut(&form, *n);
                    form.push_str(a);
                }
            }
        }
        Some((form, &rule.name))
    }

    pub fn affix_count(&self) -> usize {
        self.affixes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceToken {
    pub text: String,
    /// UMC indices of the leaves realized by this token (two for a contraction).
    pub marks: Vec<u32>,
    /// Written without a space before it.
    pub glue: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceText {
    pub tokens: Vec<SurfaceToken>,
    pub rendered: String,
}

/// Join tokens, capitalize, add the final full stop; with `marks`, each
/// token is followed by `&i_` for every leaf it realizes.
pub fn render(tokens: &[SurfaceToken], marks: bool) -> String {
    let mut s = String::new();
    for (k, t) in tokens.iter().enumerate() {
        if k > 0 && !t.glue {
            s.push(' ');
        }
        s.push_str(&t.text);
        if marks {
            for m in &t.marks {
                s.push_str(&format!("&{m}_"));
            }
        }
    }
    if s.is_empty() {
        return s;
    }
    let mut cs = s.chars();
    let first = cs.next().expect("non-empty");
    let mut out: String = first.to_uppercase().collect();
    out.push_str(cs.as_str());
    out.push('.');
    out
}

/// Remove every `&i_` mark.
pub fn strip_marks(text: &str) -> String {
    let re = Regex::new(r"&[0-9]+_").expect("static regex");
    re.replace_all(text, "").into_owned()
}

fn apply_graphemic(rules: &[GraphemicRule], mut toks: Vec<SurfaceToken>) -> Vec<SurfaceToken> {
    for r in rules {
        let mut i = 0;
        while i + 1 < toks.len() {
            if r.left.is_match(&toks[i].text) && r.right.is_match(&toks[i + 1].text) {
                match &r.action {
                    Action::Elide => {
                        toks[i].text = chars_cut(&toks[i].text, 1) + "'";
                        toks[i + 1].glue = true;
                    }
                    Action::Contract(t) => {
                        let right = toks.remove(i + 1);
                        toks[i].text = t.clone();
                        toks[i].marks.extend(right.marks);
                    }
                }
            }
            i += 1;
        }
    }
    toks
}

/// Realize the leaves of a projective UMC tree, left to right.
pub fn generate(umc: &Tree, pack: &MorphPack, emit_marks: bool) -> Result<SurfaceText, MorphError> {
    let mut toks = Vec::new();
    for leaf in umc.root.leaves() {
        let lemma = leaf
            .deco
            .atom("LEMMA")
            .ok_or(MorphError::MissingLemma { key: leaf.key })?;
        let (text, _) = pack.inflect(&leaf.deco).ok_or_else(|| MorphError::NoMatchingMorphRule {
            key: leaf.key,
            lemma: lemma.to_string(),
        })?;
        if text.is_empty() {
            continue;
        }
        toks.push(SurfaceToken {
            text,
            marks: leaf.umc.into_iter().collect(),
            glue: false,
        });
    }
    let tokens = apply_graphemic(&pack.graphemic, toks);
    let rendered = render(&tokens, emit_marks);
    Ok(SurfaceText { tokens, rendered })
}
