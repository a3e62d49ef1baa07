//! UNL data model: Universal Words, hypergraphs and documents.

mod document;
mod graph;
mod inventory;
mod uw;

pub use document::{
    parse_document, parse_document_strict, serialize_document, serialize_graph_body, serialize_utterance,
    DocumentError, DocumentErrorKind,
};
pub use graph::{AttrOrigin, NodeId, ScopeId, UnlArc, UnlDocument, UnlGraph, UnlNode, Utterance, Vertex};
pub use inventory::{Inventory, InventoryError};
pub use uw::{parse_uw, Direction, Restriction, Uw, UwError};
