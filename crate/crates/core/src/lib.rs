//! Deconversion of UNL interlingua graphs into natural-language text.
//!
//! The engine runs a fixed chain of phases over one utterance graph:
//! validation, lexical and cultural localization, lexical transfer,
//! graph-to-tree conversion, three tree-rewriting phases (structural
//! transfer, paraphrase choice, syntactic generation) and morphological
//! generation. Every intermediate structure is cached in an
//! [`pipeline::UtteranceState`] so a posteditor's edits can be applied at the
//! stage they belong to and the rest regenerated.

pub mod unl;
pub mod validate;
pub mod lexicon;
pub mod graph2tree;
pub mod localize;
pub mod morph;
pub mod par;
pub mod pipeline;
pub mod rewrite;
mod seeded;
pub mod transfer;
pub mod tree;
