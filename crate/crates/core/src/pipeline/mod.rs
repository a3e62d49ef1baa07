//! The deconversion chain for one utterance, with every intermediate
//! structure cached so edits can restart it from the stage they touch.

mod edit;
mod lingware;
mod session;
mod trace;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edit::{
    edit_and_redeconvert, export_document, export_enriched_graph, global_replace, lu_candidates, AttrLevel, Edit, LuOption,
    Policy, ReplaceReport, SkippedReplacement,
};
pub use lingware::{Lingware, LingwareError, LingwarePaths};
pub use session::{load_session, save_session};
pub use trace::{resolve_trace, trace_table, TokenTrace, TraceLink, TraceStage};

use crate::graph2tree::graph_to_tree;
use crate::lexicon::AssocCounts;
use crate::localize::{localize_culturally, localize_lexically, ChoiceMode, Chooser, LocalizationChoice};
use crate::morph::{generate, render, SurfaceText};
use crate::rewrite::{run_phase, Phase};
use crate::transfer::{transfer_lexically, MissingPolicy, TransferChoice, TransferInput, TransferredGraph};
use crate::tree::Tree;
use crate::unl::{AttrOrigin, NodeId, UnlDocument, UnlGraph, Utterance, Uw};
use crate::validate::{validate, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Validated,
    Localized,
    Transferred,
    TransferTree,
    Gma,
    Uma,
    Umc,
    Surface,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Validated,
        Stage::Localized,
        Stage::Transferred,
        Stage::TransferTree,
        Stage::Gma,
        Stage::Uma,
        Stage::Umc,
        Stage::Surface,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Validated => "validated",
            Stage::Localized => "localized",
            Stage::Transferred => "transferred",
            Stage::TransferTree => "transfer-tree",
            Stage::Gma => "gma",
            Stage::Uma => "uma",
            Stage::Umc => "umc",
            Stage::Surface => "surface",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("graph rejected by validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("{stage}: {message}")]
    Phase { stage: Stage, message: String },
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown node {0}")]
    UnknownNode(u32),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("`{lu}` is not a candidate for node {node}")]
    LuNotCandidate { node: u32, lu: String },
    #[error("stage {0} has not been computed")]
    Incomplete(Stage),
    #[error("count store: {0}")]
    Counts(#[from] crate::lexicon::LexiconError),
    #[error("session file: {0}")]
    Session(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    fn phase(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Phase {
            stage,
            message: e.to_string(),
        }
    }

    /// Input problems (as opposed to lingware bugs).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            PipelineError::Invalid(_)
                | PipelineError::UnknownNode(_)
                | PipelineError::UnknownAttribute(_)
                | PipelineError::LuNotCandidate { .. }
                | PipelineError::UnknownProfile(_)
        )
    }
}

/// Per-utterance deconversion parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub profile: String,
    pub seed: u64,
    pub mode: ChoiceMode,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            profile: "default".into(),
            seed: 42,
            mode: ChoiceMode::Automatic,
        }
    }
}

/// Posteditor corrections, re-applied on every regeneration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edits {
    /// Chosen LU per node, used by transfer.
    pub lu: BTreeMap<NodeId, String>,
    /// Localization forced to a UW picked from a widened candidate list.
    pub uw: BTreeMap<NodeId, Uw>,
    /// Interlingual attributes per node: class (or classless attribute) to value.
    pub attributes: BTreeMap<NodeId, BTreeMap<String, String>>,
    /// Monolingual style variables per node, set on the GMA.
    pub style: BTreeMap<NodeId, BTreeMap<String, String>>,
}

impl Edits {
    pub fn is_empty(&self) -> bool {
        self.lu.is_empty() && self.uw.is_empty() && self.attributes.is_empty() && self.style.is_empty()
    }
}

/// Cached structures, each present only if every earlier one is.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stages {
    pub validated: Option<UnlGraph>,
    pub localized: Option<UnlGraph>,
    pub transferred: Option<TransferredGraph>,
    pub transfer_tree: Option<Tree>,
    /// UNL node to its copies in the transfer tree.
    pub association: Option<BTreeMap<NodeId, Vec<u32>>>,
    pub gma: Option<Tree>,
    pub uma: Option<Tree>,
    pub umc: Option<Tree>,
    pub surface: Option<SurfaceText>,
}

impl Stages {
    pub fn has(&self, s: Stage) -> bool {
        match s {
            Stage::Validated => self.validated.is_some(),
            Stage::Localized => self.localized.is_some(),
            Stage::Transferred => self.transferred.is_some(),
            Stage::TransferTree => self.transfer_tree.is_some(),
            Stage::Gma => self.gma.is_some(),
            Stage::Uma => self.uma.is_some(),
            Stage::Umc => self.umc.is_some(),
            Stage::Surface => self.surface.is_some(),
        }
    }

    fn clear(&mut self, s: Stage) {
        match s {
            Stage::Validated => self.validated = None,
            Stage::Localized => self.localized = None,
            Stage::Transferred => self.transferred = None,
            Stage::TransferTree => {
                self.transfer_tree = None;
                self.association = None;
            }
            Stage::Gma => self.gma = None,
            Stage::Uma => self.uma = None,
            Stage::Umc => self.umc = None,
            Stage::Surface => self.surface = None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceState {
    pub id: String,
    /// The utterance as read, graph included.
    pub source: Utterance,
    pub config: Config,
    pub validation: Option<ValidationReport>,
    pub stages: Stages,
    pub localization_choices: Vec<LocalizationChoice>,
    pub transfer_choices: Vec<TransferChoice>,
    pub edits: Edits,
    /// Earliest stage invalidated since the last run.
    pub dirty_from: Option<Stage>,
    /// Edits applied since the last run.
    pub pending_edits: u32,
}

impl UtteranceState {
    pub fn new(id: impl Into<String>, source: Utterance, config: Config) -> Self {
        UtteranceState {
            id: id.into(),
            source,
            config,
            validation: None,
            stages: Stages::default(),
            localization_choices: Vec::new(),
            transfer_choices: Vec::new(),
            edits: Edits::default(),
            dirty_from: Some(Stage::Validated),
            pending_edits: 0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.stages.surface.is_some()
    }

    /// First stage not yet computed.
    pub fn first_missing(&self) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| !self.stages.has(*s))
    }

    /// Drop `from` and everything after it.
    pub fn invalidate(&mut self, from: Stage) {
        for s in Stage::ALL.into_iter().filter(|s| *s >= from) {
            self.stages.clear(s);
        }
        self.dirty_from = Some(self.dirty_from.map_or(from, |d| d.min(from)));
    }

    /// Canonical JSON of one stage, for byte-level comparisons.
    pub fn stage_json(&self, s: Stage) -> Option<String> {
        let st = &self.stages;
        let j = |v: &dyn erased::Ser| v.json();
        match s {
            Stage::Validated => st.validated.as_ref().map(|v| j(v)),
            Stage::Localized => st.localized.as_ref().map(|v| j(&(v, &self.localization_choices))),
            Stage::Transferred => st.transferred.as_ref().map(|v| j(&(v, &self.transfer_choices))),
            Stage::TransferTree => st.transfer_tree.as_ref().map(|v| j(&(v, &st.association))),
            Stage::Gma => st.gma.as_ref().map(|v| j(v)),
            Stage::Uma => st.uma.as_ref().map(|v| j(v)),
            Stage::Umc => st.umc.as_ref().map(|v| j(v)),
            Stage::Surface => st.surface.as_ref().map(|v| j(v)),
        }
    }

    /// Final text, with or without `&i_` marks.
    pub fn rendering(&self, marks: bool) -> Option<String> {
        self.stages.surface.as_ref().map(|s| render(&s.tokens, marks))
    }

    /// Compute every missing stage.
    pub fn run(&mut self, lw: &Lingware, counts: &AssocCounts, mut chooser: Option<&mut dyn Chooser>) -> Result<(), PipelineError> {
        let profile = lw
            .profile(&self.config.profile)
            .ok_or_else(|| PipelineError::UnknownProfile(self.config.profile.clone()))?;
        let seed = self.config.seed;
        if chooser.is_some() {
            self.config.mode = ChoiceMode::Interactive;
        }
        while let Some(stage) = self.first_missing() {
            let st = &mut self.stages;
            match stage {
                Stage::Validated => {
                    let report = validate(&self.source.graph, &lw.inventory);
                    let ok = report.ok;
                    self.validation = Some(report.clone());
                    if !ok {
                        return Err(PipelineError::Invalid(report));
                    }
                    st.validated = Some(self.source.graph.clone());
                }
                Stage::Localized => {
                    let g = st.validated.as_ref().expect("earlier stage");
                    let (mut lg, mut choices) = localize_lexically(
                        g,
                        &lw.lexicon,
                        &lw.incompat,
                        profile,
                        counts,
                        seed,
                        reborrow(&mut chooser),
                    )
                    .map_err(|e| PipelineError::phase(stage, e))?;
                    for (n, uw) in &self.edits.uw {
                        if let Some(node) = lg.node_mut(*n) {
                            node.uw = uw.clone();
                        }
                        if let Some(c) = choices.iter_mut().find(|c| c.node == *n) {
                            c.chosen = Some(uw.clone());
                            c.mode = ChoiceMode::Interactive;
                        }
                    }
                    let mut lg = localize_culturally(&lg, &lw.lexicon, profile, &lw.inventory);
                    for (n, attrs) in &self.edits.attributes {
                        let node = lg.node_mut(*n).ok_or(PipelineError::UnknownNode(n.0))?;
                        for (name, value) in attrs {
                            edit::apply_attribute(node, &lw.inventory, name, value)?;
                        }
                    }
                    st.localized = Some(lg);
                    self.localization_choices = choices;
                }
                Stage::Transferred => {
                    let g = st.localized.as_ref().expect("earlier stage");
                    let input = TransferInput {
                        lexicon: &lw.lexicon,
                        restriction_vars: &lw.restriction_vars,
                        profile,
                        counts,
                        seed,
                        overrides: &self.edits.lu,
                        missing: MissingPolicy::Untranslated,
                    };
                    let (tg, choices) =
                        transfer_lexically(g, &input, reborrow(&mut chooser)).map_err(|e| PipelineError::phase(stage, e))?;
                    st.transferred = Some(tg);
                    self.transfer_choices = choices;
                }
                Stage::TransferTree => {
                    let r = graph_to_tree(st.transferred.as_ref().expect("earlier stage"))
                        .map_err(|e| PipelineError::phase(stage, e))?;
                    st.transfer_tree = Some(r.tree);
                    st.association = Some(r.association);
                }
                Stage::Gma => {
                    let t = st.transfer_tree.as_ref().expect("earlier stage");
                    let (mut gma, _) = run_phase(Phase::Ts, t, &lw.packs, &lw.lexicon.lus, &[])
                        .map_err(|e| PipelineError::phase(stage, e))?;
                    edit::apply_style(&mut gma, &self.edits.style, &lw.packs.schema)?;
                    st.gma = Some(gma);
                }
                Stage::Uma => {
                    let t = st.gma.as_ref().expect("earlier stage");
                    let (uma, _) = run_phase(Phase::Gs1, t, &lw.packs, &lw.lexicon.lus, &profile.style)
                        .map_err(|e| PipelineError::phase(stage, e))?;
                    st.uma = Some(uma);
                }
                Stage::Umc => {
                    let t = st.uma.as_ref().expect("earlier stage");
                    let (umc, _) = run_phase(Phase::Gs2, t, &lw.packs, &lw.lexicon.lus, &[])
                        .map_err(|e| PipelineError::phase(stage, e))?;
                    st.umc = Some(umc);
                }
                Stage::Surface => {
                    let t = st.umc.as_ref().expect("earlier stage");
                    st.surface = Some(generate(t, &lw.morph, true).map_err(|e| PipelineError::phase(stage, e))?);
                }
            }
        }
        self.dirty_from = None;
        self.pending_edits = 0;
        Ok(())
    }
}

fn reborrow<'s>(c: &'s mut Option<&mut dyn Chooser>) -> Option<&'s mut dyn Chooser> {
    match c {
        Some(c) => Some(&mut **c),
        None => None,
    }
}

mod erased {
    pub trait Ser {
        fn json(&self) -> String;
    }
    impl<T: serde::Serialize> Ser for T {
        fn json(&self) -> String {
            serde_json::to_string(self).expect("stage structures serialize")
        }
    }
}

/// Deconvert one utterance from scratch.
pub fn deconvert(
    id: &str,
    utterance: &Utterance,
    lw: &Lingware,
    config: &Config,
    counts: &AssocCounts,
    chooser: Option<&mut dyn Chooser>,
) -> Result<UtteranceState, PipelineError> {
    let mut st = UtteranceState::new(id, utterance.clone(), config.clone());
    st.run(lw, counts, chooser)?;
    Ok(st)
}

/// Utterance ids used for documents: `u1`, `u2`...
pub fn utterance_id(index: usize) -> String {
    format!("u{}", index + 1)
}

/// Deconvert every utterance of a document, in parallel when the
/// `parallel` feature is on and `parallel` is true.
pub fn deconvert_document(
    doc: &UnlDocument,
    lw: &Lingware,
    config: &Config,
    counts: &AssocCounts,
    parallel: bool,
) -> Vec<Result<UtteranceState, PipelineError>> {
    let items: Vec<(usize, &Utterance)> = doc.utterances.iter().enumerate().collect();
    let one = |(i, u): &(usize, &Utterance)| deconvert(&utterance_id(*i), u, lw, config, counts, None);
    if parallel {
        crate::par::map(&items, one)
    } else {
        crate::par::map_seq(&items, one)
    }
}

/// Attribute origins used when a human sets an interlingual attribute.
pub const HUMAN: AttrOrigin = AttrOrigin::Human;
