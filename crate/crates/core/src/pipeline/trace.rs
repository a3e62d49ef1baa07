//! Linking UMC leaves back through the earlier trees to the UNL graph.

use serde::{Deserialize, Serialize};

use super::UtteranceState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceStage {
    Umc,
    Uma,
    Gma,
    TransferTree,
    Unl,
}

/// One hop of a trace: a tree node key, or a UNL node index for [`TraceStage::Unl`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLink {
    pub stage: TraceStage,
    pub id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTrace {
    /// UMC index, as in the `&i_` marks.
    pub index: u32,
    pub lemma: Option<String>,
    /// Introduced by a rule rather than copied from the graph.
    pub created: bool,
    /// Headword kept verbatim: the UW had no dictionary entry.
    pub untranslated: bool,
    pub chain: Vec<TraceLink>,
}

/// Chain for the UMC node with index `i`, from the UMC down to the UNL
/// node. Rule-created nodes link straight to the UNL node they were
/// created for. Unknown indices give an empty chain.
pub fn resolve_trace(state: &UtteranceState, i: u32) -> Vec<TraceLink> {
    let st = &state.stages;
    let Some(umc) = st.umc.as_ref() else {
        return Vec::new();
    };
    let Some(leaf) = umc.find_umc(i) else {
        return Vec::new();
    };
    let mut chain = vec![TraceLink {
        stage: TraceStage::Umc,
        id: leaf.key,
    }];
    if !leaf.created {
        let trees = [
            (TraceStage::Uma, st.uma.as_ref()),
            (TraceStage::Gma, st.gma.as_ref()),
            (TraceStage::TransferTree, st.transfer_tree.as_ref()),
        ];
        for (stage, t) in trees {
            if let Some(n) = t.and_then(|t| t.find(leaf.key)) {
                chain.push(TraceLink { stage, id: n.key });
            }
        }
    }
    if let Some(n) = leaf.unl {
        chain.push(TraceLink {
            stage: TraceStage::Unl,
            id: n.0,
        });
    }
    chain
}

/// A trace for every UMC leaf, left to right.
pub fn trace_table(state: &UtteranceState) -> Vec<TokenTrace> {
    let Some(umc) = state.stages.umc.as_ref() else {
        return Vec::new();
    };
    umc.root
        .leaves()
        .filter_map(|l| l.umc.map(|i| (i, l)))
        .map(|(i, l)| TokenTrace {
            index: i,
            lemma: l.deco.atom("LEMMA").map(str::to_string),
            created: l.created,
            untranslated: l.deco.is("UNTRANS", "YES"),
            chain: resolve_trace(state, i),
        })
        .collect()
}
