//! Loading and cross-checking a target-language lingware directory.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::lexicon::{load_profiles, Lexicon, LexiconError, LuTable, Profile};
use crate::localize::Incompatibilities;
use crate::morph::{MorphError, MorphPack};
use crate::rewrite::{compile_grammar, RewriteError, RulePacks, Schema, VarKind};
use crate::transfer::RestrictionVars;
use crate::unl::{Inventory, InventoryError};

#[derive(Debug, Error)]
pub enum LingwareError {
    #[error("{path}: {source}")]
    Inventory { path: PathBuf, source: InventoryError },
    #[error("{path}: {source}")]
    Lexicon { path: PathBuf, source: LexiconError },
    #[error("{path}: {source}")]
    Rules { path: PathBuf, source: RewriteError },
    #[error("{path}: {source}")]
    Morph { path: PathBuf, source: MorphError },
    #[error("inconsistent lingware: {0}")]
    Inconsistent(String),
}

/// Where each lingware file lives. [`LingwarePaths::in_dir`] gives the
/// conventional layout.
#[derive(Debug, Clone)]
pub struct LingwarePaths {
    pub inventory: PathBuf,
    pub dictionaries: Vec<PathBuf>,
    pub lus: PathBuf,
    pub schema: PathBuf,
    pub ts: PathBuf,
    pub gs1: PathBuf,
    pub gs2: PathBuf,
    pub morph: PathBuf,
    /// Without a profile file there is one built-in profile, `default`.
    pub profiles: Option<PathBuf>,
    pub incompat: Option<PathBuf>,
    pub restrictions: Option<PathBuf>,
}

impl LingwarePaths {
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |f: &str| Some(dir.join(f)).filter(|p| p.exists());
        LingwarePaths {
            inventory: dir.join("inventory.cfg"),
            dictionaries: vec![dir.join("dict.tsv")],
            lus: dir.join("lus.tsv"),
            schema: dir.join("schema.dv"),
            ts: dir.join("ts.rules"),
            gs1: dir.join("gs1.rules"),
            gs2: dir.join("gs2.rules"),
            morph: dir.join("morph"),
            profiles: opt("profiles.cfg"),
            incompat: opt("incompat.tsv"),
            restrictions: opt("restrictions.tsv"),
        }
    }
}

/// Everything the deconverter needs for one target language. Immutable once
/// loaded and shared read-only between utterances.
#[derive(Debug, Clone)]
pub struct Lingware {
    pub inventory: Inventory,
    pub lexicon: Lexicon,
    pub incompat: Incompatibilities,
    pub restriction_vars: RestrictionVars,
    pub packs: RulePacks,
    pub morph: MorphPack,
    pub profiles: Vec<Profile>,
}

/// Variables the engine itself reads or writes, with the kind it expects.
const ENGINE_VARS: &[(&str, &str)] = &[
    ("NODE", "exc"),
    ("DIR", "exc"),
    ("CAT", "exc"),
    ("UNTRANS", "exc"),
    ("DRV", "exc"),
    ("UATT", "nex"),
    ("STYLE", "nex"),
    ("REL", "str"),
    ("UL", "str"),
    ("HW", "str"),
    ("LEMMA", "str"),
    ("PARADIGM", "str"),
];

fn lex(path: &Path) -> impl Fn(LexiconError) -> LingwareError + '_ {
    move |source| LingwareError::Lexicon {
        path: path.to_path_buf(),
        source,
    }
}

fn rules(path: &Path) -> impl Fn(RewriteError) -> LingwareError + '_ {
    move |source| LingwareError::Rules {
        path: path.to_path_buf(),
        source,
    }
}

impl Lingware {
    pub fn load_dir(dir: &Path) -> Result<Self, LingwareError> {
        Self::load(&LingwarePaths::in_dir(dir))
    }

    pub fn load(p: &LingwarePaths) -> Result<Self, LingwareError> {
        let inventory = Inventory::load(&p.inventory).map_err(|source| LingwareError::Inventory {
            path: p.inventory.clone(),
            source,
        })?;
        Self::load_with_inventory(p, inventory)
    }

    /// Like [`Lingware::load`] with the inventory given directly;
    /// `p.inventory` is ignored.
    pub fn load_with_inventory(p: &LingwarePaths, inventory: Inventory) -> Result<Self, LingwareError> {
        let mut lexicon = Lexicon::new();
        for d in &p.dictionaries {
            lexicon.load_dictionary(d).map_err(lex(d))?;
        }
        lexicon.attach_lus(LuTable::load(&p.lus).map_err(lex(&p.lus))?);
        let incompat = match &p.incompat {
            Some(f) => Incompatibilities::load(f).map_err(lex(f))?,
            None => Incompatibilities::default(),
        };
        let restriction_vars = match &p.restrictions {
            Some(f) => RestrictionVars::load(f).map_err(lex(f))?,
            None => RestrictionVars::default(),
        };
        let schema = Schema::load(&p.schema).map_err(rules(&p.schema))?;
        let read = |path: &Path| {
            std::fs::read_to_string(path).map_err(|e| LingwareError::Rules {
                path: path.to_path_buf(),
                source: e.into(),
            })
        };
        let ts = compile_grammar("ts", &read(&p.ts)?, &schema).map_err(rules(&p.ts))?;
        let gs1 = compile_grammar("gs1", &read(&p.gs1)?, &schema).map_err(rules(&p.gs1))?;
        let gs2 = compile_grammar("gs2", &read(&p.gs2)?, &schema).map_err(rules(&p.gs2))?;
        let morph = MorphPack::load_dir(&p.morph).map_err(|source| LingwareError::Morph {
            path: p.morph.clone(),
            source,
        })?;
        let profiles = match &p.profiles {
            Some(f) => load_profiles(f).map_err(lex(f))?,
            None => vec![Profile::default()],
        };
        let lw = Lingware {
            inventory,
            lexicon,
            incompat,
            restriction_vars,
            packs: RulePacks { schema, ts, gs1, gs2 },
            morph,
            profiles,
        };
        lw.check()?;
        Ok(lw)
    }

    pub fn profile(&self, name: &str) -> Option<&Profile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    /// Cross-file consistency: the schema must type everything the engine and
    /// the tables put into decorations.
    pub fn check(&self) -> Result<(), LingwareError> {
        let bad = |m: String| Err(LingwareError::Inconsistent(m));
        let schema = &self.packs.schema;
        for (var, want) in ENGINE_VARS {
            let ok = match (schema.kind(var), *want) {
                (Some(VarKind::Exclusive(_)), "exc") | (Some(VarKind::NonExclusive(_)), "nex") | (Some(VarKind::Str), "str") => true,
                _ => false,
            };
            if !ok {
                return bad(format!("schema must declare `{var}` as a {want} variable"));
            }
        }
        let atom = |var: &str, val: &str| schema.check_value(var, &crate::tree::Value::Atom(val.to_string()));
        for v in ["LEX", "SCOPE"] {
            atom("NODE", v).or_else(|m| bad(m))?;
        }
        for v in ["ENTRY", "FWD", "INV"] {
            atom("DIR", v).or_else(|m| bad(m))?;
        }
        atom("UNTRANS", "YES").or_else(|m| bad(m))?;
        if let Some(VarKind::NonExclusive(uatt)) = schema.kind("UATT") {
            if let Some(a) = self.inventory.attributes.iter().find(|a| !uatt.contains(*a)) {
                return bad(format!("UATT does not cover the inventory attribute `{a}`"));
            }
        }
        for e in self.lexicon.uws().iter().flat_map(|uw| self.lexicon.entries_for(uw)) {
            atom("CAT", &e.pos).or_else(|m| bad(format!("dictionary entry `{}`: {m}", e.lu)))?;
            let Some(unit) = self.lexicon.lus.get(&e.lu) else {
                return bad(format!("LU `{}` has no derivation table", e.lu));
            };
            for d in &unit.derivations {
                atom("CAT", &d.category).or_else(|m| bad(format!("`{}`: {m}", e.lu)))?;
                if atom("DRV", &d.name.to_uppercase()).is_err() {
                    return bad(format!("derivation `{}` of `{}` is not a DRV value", d.name, e.lu));
                }
                for (k, v) in &d.features {
                    atom(k, v).or_else(|m| bad(format!("`{}`: {m}", e.lu)))?;
                }
            }
        }
        for (k, v) in self.restriction_vars.all_assignments() {
            atom(k, v).or_else(|m| bad(format!("restriction table: {m}")))?;
        }
        for p in &self.profiles {
            for ((_, class), value) in &p.attribute_defaults {
                if !self.inventory.classes.get(class).is_some_and(|vs| vs.contains(value)) {
                    return bad(format!("profile `{}`: `{value}` is not in attribute class `{class}`", p.name));
                }
            }
            for s in &p.style {
                if schema.check_value("STYLE", &crate::tree::Value::Set([s.clone()].into())).is_err() {
                    return bad(format!("profile `{}`: unknown style `{s}`", p.name));
                }
            }
        }
        Ok(())
    }
}
