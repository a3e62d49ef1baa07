//! A generated tree is projective when every lexical node is a leaf and every
//! subtree covers a contiguous run of leaves.

use crate::tree::{Tree, TreeNode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("node {key}: {reason}")]
pub struct ProjectivityViolation {
    pub key: u32,
    pub reason: String,
}

/// Leaf positions covered by `n`, appended to `out`; `next` counts leaves seen.
fn spans(n: &TreeNode, next: &mut usize, out: &mut Vec<(u32, usize, usize, usize)>) {
    let start = *next;
    if n.is_leaf() {
        *next += 1;
    }
    for c in &n.children {
        spans(c, next, out);
    }
    out.push((n.key, start, *next, n.leaves().count()));
}

pub fn check_projective(tree: &Tree) -> Result<(), ProjectivityViolation> {
    if let Some(n) = tree.root.walk().find(|n| n.deco.get("LEMMA").is_some() && !n.is_leaf()) {
        return Err(ProjectivityViolation {
            key: n.key,
            reason: format!("lexical node `{}` has {} children", n.head(), n.children.len()),
        });
    }
    let mut out = Vec::new();
    spans(&tree.root, &mut 0, &mut out);
    for (key, lo, hi, count) in out {
        if hi - lo != count {
            return Err(ProjectivityViolation {
                key,
                reason: format!("covers {count} leaves spread over {} positions", hi - lo),
            });
        }
    }
    Ok(())
}
