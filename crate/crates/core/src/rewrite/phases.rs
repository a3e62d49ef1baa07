//! The three rewriting phases and the lexicalization step closing GS1.

use serde::{Deserialize, Serialize};

use super::{check_projective, run_grammar, Grammar, RewriteError, Schema, Step};
use crate::lexicon::LuTable;
use crate::tree::{Tree, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    /// Structural transfer: transfer tree to GMA.
    Ts,
    /// Paraphrase choice: GMA to UMA.
    Gs1,
    /// Syntactic generation: UMA to UMC.
    Gs2,
}

/// A schema and the three grammars compiled against it.
#[derive(Debug, Clone)]
pub struct RulePacks {
    pub schema: Schema,
    pub ts: Grammar,
    pub gs1: Grammar,
    pub gs2: Grammar,
}

impl RulePacks {
    pub fn grammar(&self, phase: Phase) -> &Grammar {
        match phase {
            Phase::Ts => &self.ts,
            Phase::Gs1 => &self.gs1,
            Phase::Gs2 => &self.gs2,
        }
    }
}

/// Add profile-wide style preferences to every lexical node.
pub fn apply_style(tree: &mut Tree, style: &[String]) {
    tree.for_each_mut(|n| {
        if n.deco.is("NODE", "LEX") {
            for s in style {
                n.deco.add("STYLE", s.clone());
            }
        }
    });
}

/// Replace each `UL` by the lemma, paradigm, category and features of the
/// derivation selected by `DRV` (or by `CAT` when `DRV` is unset).
/// Untranslated nodes are realized by their headword.
pub fn lexicalize(tree: &mut Tree, lus: &LuTable, schema: &Schema) -> Result<(), RewriteError> {
    let mut result = Ok(());
    tree.for_each_mut(|n| {
        if result.is_err() || !n.deco.is("NODE", "LEX") {
            return;
        }
        let key = n.key;
        let fail = |message: String| RewriteError::Lexicalize { key, message };
        if n.deco.is("UNTRANS", "YES") {
            let hw = n.deco.atom("HW").unwrap_or_default().to_string();
            n.deco.set_atom("LEMMA", hw);
            n.deco.set_atom("PARADIGM", "untranslated");
            return;
        }
        let Some(lu) = n.deco.atom("UL").map(str::to_string) else {
            result = Err(fail("lexical node without UL".into()));
            return;
        };
        let Some(unit) = lus.get(&lu) else {
            result = Err(fail(format!("no derivation table for `{lu}`")));
            return;
        };
        let d = match n.deco.atom("DRV") {
            Some(drv) => match unit.derivation(drv) {
                Some(d) => d,
                None => {
                    result = Err(fail(format!("`{lu}` has no `{drv}` derivation")));
                    return;
                }
            },
            None => unit.for_category(n.deco.atom("CAT").unwrap_or("N")),
        };
        let mut assign = vec![
            ("LEMMA".to_string(), d.lemma.clone()),
            ("PARADIGM".to_string(), d.paradigm.clone()),
            ("CAT".to_string(), d.category.clone()),
        ];
        assign.extend(d.features.iter().cloned());
        for (k, v) in assign {
            let value = match schema.kind(&k) {
                Some(super::VarKind::NonExclusive(_)) => Value::Set([v].into()),
                _ => Value::Atom(v),
            };
            if let Err(m) = schema.check_value(&k, &value) {
                result = Err(fail(format!("derivation `{}` of `{lu}`: {m}", d.name)));
                return;
            }
            n.deco.put(&k, Some(value));
        }
    });
    result
}

/// Run one phase on a copy of `tree`. GS1 ends with lexicalization; GS2
/// numbers the result in preorder and checks it is projective.
pub fn run_phase(
    phase: Phase,
    tree: &Tree,
    packs: &RulePacks,
    lus: &LuTable,
    style: &[String],
) -> Result<(Tree, Vec<Step>), RewriteError> {
    let mut t = tree.clone();
    if phase == Phase::Gs1 {
        apply_style(&mut t, style);
    }
    let steps = run_grammar(packs.grammar(phase), &mut t, &packs.schema)?;
    match phase {
        Phase::Ts => {}
        Phase::Gs1 => lexicalize(&mut t, lus, &packs.schema)?,
        Phase::Gs2 => {
            t.assign_umc_indices();
            check_projective(&t)?;
        }
    }
    packs.schema.check_tree(&t)?;
    Ok((t, steps))
}
