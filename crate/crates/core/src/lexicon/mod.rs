//! Target-language dictionaries, derivation tables, user profiles and
//! association counts.

mod counts;
mod dictionary;
mod lu;
mod profile;

use thiserror::Error;

pub use counts::{increment, load_counts, save_counts, AssocCounts, CountStore, PairKind};
pub use dictionary::{Dictionary, LexEntry, Lexicon, ScoredEntry};
pub use lu::{Derivation, LexicalUnit, LuTable};
pub use profile::{load_profiles, parse_profiles, Profile};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("UW `{0}` is not in the dictionary")]
    NotInDictionary(String),
    #[error("line {line}: duplicate entry ({uw}, {lu}), first defined at line {first}")]
    DuplicateEntry {
        line: usize,
        first: usize,
        uw: String,
        lu: String,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("count storage: {0}")]
    Storage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
