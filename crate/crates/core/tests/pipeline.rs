mod common;

use unl_deconv::lexicon::{AssocCounts, CountStore, ScoredEntry};
use unl_deconv::localize::{Candidate, ChoiceMode, Chooser};
use unl_deconv::pipeline::*;
use unl_deconv::unl::{parse_document, serialize_utterance, NodeId, UnlDocument, Uw};

use common::*;

fn attr(node: u32, name: &str, value: &str, level: AttrLevel) -> Edit {
    Edit::SetAttribute {
        level,
        node: NodeId(node),
        name: name.into(),
        value: value.into(),
    }
}

#[test]
fn invalid_graph_stops_at_validation() {
    let lw = demo();
    let utt = parse_document("[unl]\nagt(eat(icl>consume).@entry, cat(icl>animal))\nobj(dog(icl>animal), meat(icl>food))\n[/unl]\n")
        .unwrap()
        .utterances
        .remove(0);
    let err = deconvert("u1", &utt, &lw, &Config::default(), &AssocCounts::default(), None).unwrap_err();
    match err {
        PipelineError::Invalid(r) => assert!(r.has_code("CONNECTIVITY")),
        e => panic!("{e}"),
    }
}

#[test]
fn rerun_without_edits_is_the_identity() {
    let lw = demo();
    let mut st = run(&lw, &corpus_file("boy-says-cat-sleeps.unl"), "default", 42, &AssocCounts::default());
    let before = st.clone();
    st.run(&lw, &AssocCounts::default(), None).unwrap();
    assert_eq!(st, before);
    st.invalidate(Stage::Validated);
    st.run(&lw, &AssocCounts::default(), None).unwrap();
    for s in Stage::ALL {
        assert_eq!(st.stage_json(s), before.stage_json(s), "{s}");
    }
}

#[test]
fn untranslated_headword_is_flagged() {
    let lw = demo();
    let st = run(&lw, &corpus_file("john-eats-apple.unl"), "default", 42, &AssocCounts::default());
    let t = trace_table(&st);
    let john = t.iter().find(|t| t.lemma.as_deref() == Some("John")).unwrap();
    assert!(john.untranslated);
    assert!(t.iter().filter(|x| x.lemma.as_deref() != Some("John")).all(|x| !x.untranslated));
}

#[test]
fn inserted_article_traces_to_its_governor() {
    let lw = demo();
    let st = run(&lw, &corpus_file("cat-eats-mouse.unl"), "default", 42, &AssocCounts::default());
    let t = trace_table(&st);
    let article = &t[0];
    assert!(article.created);
    assert_eq!(article.lemma.as_deref(), Some("le"));
    let chain = &article.chain;
    assert_eq!(chain.len(), 2);
    assert_eq!(chain[0].stage, TraceStage::Umc);
    assert_eq!(chain[1], TraceLink { stage: TraceStage::Unl, id: 2 });
}

#[test]
fn elided_article_resolves_to_the_article_leaf() {
    let lw = demo();
    let st = run(&lw, &corpus_file("child-loves-tree.unl"), "default", 42, &AssocCounts::default());
    let surface = st.stages.surface.as_ref().unwrap();
    let tok = surface.tokens.iter().find(|t| t.text == "l'").unwrap();
    let leaf = st.stages.umc.as_ref().unwrap().find_umc(tok.marks[0]).unwrap();
    assert_eq!(leaf.deco.atom("LEMMA"), Some("le"));
    assert!(!resolve_trace(&st, tok.marks[0]).is_empty());
}

#[test]
fn on_demand_edits_wait_for_a_trigger() {
    let lw = demo();
    let store = CountStore::in_memory();
    let mut st = run(&lw, &corpus_file("cat-eats-mouse.unl"), "default", 42, &store.snapshot());
    assert!(!edit_and_redeconvert(&mut st, attr(2, "number", "pl", AttrLevel::Interlingual), Policy::OnDemand, &lw, &store).unwrap());
    assert!(!edit_and_redeconvert(&mut st, attr(3, "number", "pl", AttrLevel::Interlingual), Policy::OnDemand, &lw, &store).unwrap());
    assert_eq!(st.pending_edits, 2);
    assert!(!st.stages.has(Stage::Localized));
    assert!(st.stages.has(Stage::Validated));
    st.run(&lw, &store.snapshot(), None).unwrap();
    assert_eq!(st.rendering(false).unwrap(), "Les chats mangent les souris.");
    assert_eq!(st.pending_edits, 0);
}

#[test]
fn every_k_policy() {
    let lw = demo();
    let store = CountStore::in_memory();
    let mut st = run(&lw, &corpus_file("cat-eats-mouse.unl"), "default", 42, &store.snapshot());
    let p = Policy::EveryK(2);
    assert!(!edit_and_redeconvert(&mut st, attr(2, "number", "pl", AttrLevel::Interlingual), p, &lw, &store).unwrap());
    assert!(edit_and_redeconvert(&mut st, attr(1, "tense", "past", AttrLevel::Interlingual), p, &lw, &store).unwrap());
    assert_eq!(st.rendering(false).unwrap(), "Les chats ont mangé la souris.");
}

#[test]
fn negation_attribute_round_trip() {
    let lw = demo();
    let store = CountStore::in_memory();
    let mut st = run(&lw, &corpus_file("dog-not-meat.unl"), "default", 42, &store.snapshot());
    edit_and_redeconvert(&mut st, attr(1, "not", "no", AttrLevel::Interlingual), Policy::Always, &lw, &store).unwrap();
    assert_eq!(st.rendering(false).unwrap(), "Le chien mange la viande.");
    for bad in [attr(1, "entry", "no", AttrLevel::Interlingual), attr(1, "number", "dual", AttrLevel::Interlingual), attr(1, "CAT", "Q", AttrLevel::Style)] {
        assert!(matches!(
            edit_and_redeconvert(&mut st, bad, Policy::Always, &lw, &store),
            Err(PipelineError::UnknownAttribute(_))
        ));
    }
    assert!(matches!(
        edit_and_redeconvert(&mut st, attr(9, "not", "yes", AttrLevel::Interlingual), Policy::Always, &lw, &store),
        Err(PipelineError::UnknownNode(9))
    ));
}

#[test]
fn style_edit_only_touches_gma_onwards() {
    let lw = demo();
    let store = CountStore::in_memory();
    let mut st = run(&lw, &corpus_file("army-destroys-city.unl"), "default", 42, &store.snapshot());
    let before: Vec<_> = Stage::ALL.iter().map(|&s| st.stage_json(s)).collect();
    edit_and_redeconvert(&mut st, attr(1, "STYLE", "NOMINAL", AttrLevel::Style), Policy::Always, &lw, &store).unwrap();
    for (k, s) in Stage::ALL.iter().enumerate() {
        assert_eq!(st.stage_json(*s) == before[k], *s < Stage::Gma, "{s}");
    }
    assert_eq!(st.rendering(false).unwrap(), "La destruction de la ville par l'armée.");
    // style-only edits stay out of the export
    assert_eq!(export_enriched_graph(&st, &lw.inventory).unwrap(), serialize_utterance(&st.source));
}

#[test]
fn widened_choice_overrides_localization() {
    let lw = demo();
    let store = CountStore::in_memory();
    let mut st = run(&lw, &corpus_file("teacher-finds-armchair.unl"), "default", 42, &store.snapshot());
    let narrow: Vec<String> = lu_candidates(&st, NodeId(3), false, &lw).unwrap().into_iter().map(|c| c.lu).collect();
    assert!(!narrow.contains(&"table".to_string()));
    let wide = lu_candidates(&st, NodeId(3), true, &lw).unwrap();
    assert!(narrow.iter().all(|l| wide.iter().any(|w| &w.lu == l)));
    edit_and_redeconvert(&mut st, Edit::ChooseLu { node: NodeId(3), lu: "table".into() }, Policy::Always, &lw, &store).unwrap();
    assert_eq!(st.rendering(false).unwrap(), "Le professeur trouve une table.");
    let counts = store.snapshot();
    assert_eq!(counts.uw2uw("armchair(icl>furniture)", "table(icl>furniture)"), 1);
    assert_eq!(counts.uw2lu("table(icl>furniture)", "table"), 1);
    assert_eq!(st.edits.uw[&NodeId(3)], Uw::parse("table(icl>furniture)").unwrap());
    // the learned UW association now decides the localization tie
    for seed in 0..8 {
        let fresh = run(&lw, &corpus_file("teacher-finds-armchair.unl"), "default", seed, &counts);
        assert_eq!(fresh.rendering(false).unwrap(), "Le professeur trouve une table.");
    }
    let r = edit_and_redeconvert(&mut st, Edit::ChooseLu { node: NodeId(3), lu: "girafe".into() }, Policy::Always, &lw, &store);
    assert!(matches!(r, Err(PipelineError::LuNotCandidate { node: 3, .. })), "{r:?}");
}

#[test]
fn global_replace_follows_gender() {
    let lw = demo();
    let store = CountStore::in_memory();
    let files = ["teacher-finds-chair.unl", "cat-eats-mouse.unl", "teacher-finds-chair.unl", "teacher-finds-armchair.unl"];
    let mut states: Vec<UtteranceState> = files
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let cfg = Config::default();
            deconvert(&utterance_id(i), &corpus_file(f), &lw, &cfg, &store.snapshot(), None).unwrap()
        })
        .collect();
    let untouched = states[1].clone();
    let report = global_replace(&mut states, "fauteuil", "chaise", &lw, &store).unwrap();
    assert_eq!(report.changed, vec!["u1", "u3", "u4"]);
    assert_eq!(report.replaced_nodes, 3);
    for k in [0, 2, 3] {
        assert_eq!(states[k].rendering(false).unwrap(), "Le professeur trouve une chaise.");
    }
    assert_eq!(states[1], untouched);
    assert_eq!(store.snapshot().uw2lu("chair(icl>furniture)", "chaise"), 3);
    let none = global_replace(&mut states, "absent", "chaise", &lw, &store).unwrap();
    assert!(none.changed.is_empty());
    let skipped = global_replace(&mut states, "chat", "chaise", &lw, &store).unwrap();
    assert!(skipped.changed.is_empty());
    assert_eq!(skipped.skipped.len(), 1);
}

#[test]
fn export_adds_exactly_the_human_attributes() {
    let lw = demo();
    let store = CountStore::in_memory();
    let utt = corpus_file("girl-sees-cars.unl");
    let mut st = run(&lw, &utt, "default", 42, &store.snapshot());
    let plain = serialize_utterance(&utt);
    assert_eq!(export_enriched_graph(&st, &lw.inventory).unwrap(), plain);
    edit_and_redeconvert(&mut st, Edit::ChooseLu { node: NodeId(2), lu: "fille".into() }, Policy::Always, &lw, &store).unwrap();
    assert_eq!(export_enriched_graph(&st, &lw.inventory).unwrap(), plain);
    edit_and_redeconvert(&mut st, attr(2, "number", "pl", AttrLevel::Interlingual), Policy::Always, &lw, &store).unwrap();
    assert_eq!(st.rendering(false).unwrap(), "Les filles voient les petites voitures rouges.");
    let out = export_enriched_graph(&st, &lw.inventory).unwrap();
    let body: Vec<&str> = out.lines().filter(|l| !l.starts_with(';')).collect();
    let diff: Vec<(&str, &str)> = plain.lines().zip(body).filter(|(a, b)| a != b).collect();
    assert_eq!(diff.len(), 1);
    assert_eq!(diff[0].1.replace(".@pl", ""), diff[0].0);
    assert!(out.lines().next().unwrap().starts_with("; proposed revision"));
    // the exported text parses back with the attribute in place
    let back = parse_document(&out).unwrap();
    assert!(back.utterances[0].graph.node(NodeId(2)).unwrap().has_attr("pl"));
}

#[test]
fn session_file_round_trip() {
    let lw = demo();
    let store = CountStore::in_memory();
    let mut a = run(&lw, &corpus_file("teacher-finds-chair.unl"), "default", 42, &store.snapshot());
    edit_and_redeconvert(&mut a, Edit::ChooseLu { node: NodeId(3), lu: "chaise".into() }, Policy::Always, &lw, &store).unwrap();
    let b = run(&lw, &corpus_file("boy-says-cat-sleeps.unl"), "default", 7, &store.snapshot());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s1.session");
    save_session(&path, &[a.clone(), b.clone()]).unwrap();
    let back = load_session(&path).unwrap();
    assert_eq!(back, vec![a, b]);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(load_session(&path), Err(PipelineError::Session(_))));
}

#[test]
fn parallel_and_sequential_documents_agree() {
    let lw = demo();
    let doc = UnlDocument {
        utterances: golden().into_iter().filter(|c| c.profile == "default").map(|c| c.utterance).collect(),
    };
    let cfg = Config::default();
    let par = deconvert_document(&doc, &lw, &cfg, &AssocCounts::default(), true);
    let seq = deconvert_document(&doc, &lw, &cfg, &AssocCounts::default(), false);
    assert_eq!(par.len(), doc.utterances.len());
    for (p, s) in par.iter().zip(&seq) {
        assert_eq!(p.as_ref().unwrap(), s.as_ref().unwrap());
    }
}

struct PickLast {
    uw_calls: usize,
    lu_calls: usize,
}

impl Chooser for PickLast {
    fn choose_uw(&mut self, _: NodeId, _: &Uw, c: &[Candidate]) -> Option<usize> {
        self.uw_calls += 1;
        Some(c.len() - 1)
    }

    fn choose_lu(&mut self, _: NodeId, _: &Uw, c: &[ScoredEntry]) -> Option<usize> {
        self.lu_calls += 1;
        Some(c.len() - 1)
    }
}

#[test]
fn interactive_choices_fire_in_both_steps() {
    let lw = demo();
    let mut ch = PickLast { uw_calls: 0, lu_calls: 0 };
    let st = deconvert("u1", &corpus_file("teacher-finds-armchair.unl"), &lw, &Config::default(), &AssocCounts::default(), Some(&mut ch)).unwrap();
    assert_eq!(ch.uw_calls, 1);
    assert_eq!(st.config.mode, ChoiceMode::Interactive);
    let loc = st.localization_choices.iter().find(|c| c.node == NodeId(3)).unwrap();
    assert_eq!(loc.mode, ChoiceMode::Interactive);
    assert_eq!(loc.chosen.as_ref(), Some(&loc.candidates.last().unwrap().uw));

    let mut ch = PickLast { uw_calls: 0, lu_calls: 0 };
    let st = deconvert("u1", &corpus_file("teacher-finds-chair.unl"), &lw, &Config::default(), &AssocCounts::default(), Some(&mut ch)).unwrap();
    assert_eq!((ch.uw_calls, ch.lu_calls), (0, 1));
    let tc = st.transfer_choices.iter().find(|c| c.node == NodeId(3)).unwrap();
    assert_eq!(tc.mode, ChoiceMode::Interactive);
}
