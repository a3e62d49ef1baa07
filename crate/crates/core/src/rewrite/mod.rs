//! Tree-rewriting phases: a typed variable schema, a rule language compiled
//! against it, and a priority-ordered rewriting engine.

mod compile;
mod engine;
mod lexer;
pub mod phases;
pub mod projectivity;
pub mod schema;

use thiserror::Error;

pub use compile::{compile_grammar, Grammar, Rule, DEFAULT_MAX_ITERATIONS};
pub use engine::{apply_at, find_match, matches, run_grammar, Binding, Step};
pub use phases::{apply_style, lexicalize, run_phase, Phase, RulePacks};
pub use projectivity::{check_projective, ProjectivityViolation};
pub use schema::{Schema, VarKind};

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("type error at {line}:{col}: {message}")]
    Type { line: usize, col: usize, message: String },
    #[error("node {key} violates the schema: {message}")]
    Schema { key: u32, message: String },
    #[error("grammar `{grammar}` exceeded {limit} rule applications (last rule `{rule}`)")]
    IterationLimit { grammar: String, limit: usize, rule: String },
    #[error("rule `{rule}` would delete node {key}, which carries a graph index")]
    TacticalDeletion { rule: String, key: u32 },
    #[error("lexicalizing node {key}: {message}")]
    Lexicalize { key: u32, message: String },
    #[error("output is not projective: {0}")]
    NotProjective(#[from] ProjectivityViolation),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
