//! Acceptance suite: one line per criterion, then a single verdict.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::Rng;
use unl_deconv::graph2tree::{convert_arcs, graph_to_tree, G2TError};
use unl_deconv::lexicon::{AssocCounts, CountStore, Dictionary, Lexicon, PairKind, Profile};
use unl_deconv::localize::{localize_lexically, Incompatibilities};
use unl_deconv::morph::{generate, strip_marks};
use unl_deconv::pipeline::{edit_and_redeconvert, Edit, Policy, Stage, TraceStage};
use unl_deconv::rewrite::{check_projective, compile_grammar, run_grammar, RewriteError};
use unl_deconv::tree::Tree;
use unl_deconv::unl::{parse_document, NodeId, Uw};

use common::*;

const G2T_GRAPHS: usize = 1000;
const G2T_MAX_ARCS: usize = 50;
const G2T_TIME_BUDGET: Duration = Duration::from_secs(5);
const ZERO_REVERSAL_GRAPHS: usize = 500;
const LOCALIZE_INSTANCES: usize = 200;
const LOCALIZE_MAX_DICT: usize = 100;
const DETERMINISM_REPEATS: usize = 20;
const SEED: u64 = 42;
const DIST_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tree_labels(t: &Tree) -> Vec<String> {
    let mut out: Vec<String> = t
        .root
        .walk()
        .filter(|n| n.deco.get("UL").is_some() || n.deco.is("UNTRANS", "YES"))
        .filter(|n| !n.deco.is("DIR", "ENTRY"))
        .map(|n| n.deco.atom("REL").unwrap().to_string())
        .collect();
    out.sort();
    out
}

fn g2t_conservation() -> Outcome {
    let mut rng = rng(1);
    let start = Instant::now();
    for k in 0..G2T_GRAPHS {
        let m = rng.random_range(1..=G2T_MAX_ARCS);
        let (nodes, arcs) = connected_arcs(&mut rng, m, false);
        let entry = rng.random_range(0..nodes);
        let r = graph_to_tree(&bare_transfer(&unl_text(nodes, &arcs, entry))).map_err(|e| format!("graph {k}: {e}"))?;
        ensure(r.tree.size() == arcs.len() + 1, || {
            format!("graph {k}: {} tree nodes for {} arcs", r.tree.size(), arcs.len())
        })?;
        let mut want: Vec<String> = arcs.iter().map(|a| a.1.to_string()).collect();
        want.sort();
        ensure(tree_labels(&r.tree) == want, || format!("graph {k}: label multiset differs"))?;
    }
    let took = start.elapsed();
    ensure(took < G2T_TIME_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{G2T_GRAPHS} graphs in {took:.2?}"))
}

fn g2t_totality() -> Outcome {
    let mut rng = rng(2);
    for k in 0..G2T_GRAPHS {
        let m = rng.random_range(1..=G2T_MAX_ARCS / 2);
        let (n1, a1) = connected_arcs(&mut rng, m, false);
        let mut arcs = a1;
        let nodes = if rng.random_bool(0.3) {
            n1 + 1
        } else {
            let m2 = rng.random_range(1..=G2T_MAX_ARCS / 2);
            let (n2, a2) = connected_arcs(&mut rng, m2, false);
            arcs.extend(a2.into_iter().map(|(a, l, b)| (a + n1, l, b + n1)));
            n1 + n2
        };
        let entry = rng.random_range(0..nodes);
        match graph_to_tree(&bare_transfer(&unl_text(nodes, &arcs, entry))) {
            Err(e @ G2TError::NonConnectedGraph) if e.to_string() == "non connected graph" => {}
            other => return Err(format!("disconnected graph {k}: {other:?}")),
        }
    }
    for k in 0..G2T_GRAPHS {
        let m = rng.random_range(1..=G2T_MAX_ARCS);
        let (nodes, arcs) = connected_arcs(&mut rng, m, false);
        let entry = rng.random_range(0..nodes);
        if let Err(e) = graph_to_tree(&bare_transfer(&unl_text(nodes, &arcs, entry))) {
            return Err(format!("connected graph {k}: {e}"));
        }
    }
    Ok(format!("{G2T_GRAPHS} disconnected rejected, {G2T_GRAPHS} connected accepted"))
}

fn zero_reversal() -> Outcome {
    let mut rng = rng(3);
    for k in 0..ZERO_REVERSAL_GRAPHS {
        let m = rng.random_range(1..=G2T_MAX_ARCS);
        let (nodes, arcs) = connected_arcs(&mut rng, m, true);
        let r = graph_to_tree(&bare_transfer(&unl_text(nodes, &arcs, 0))).map_err(|e| format!("graph {k}: {e}"))?;
        ensure(r.reversed_count == 0, || format!("graph {k}: {} reversals", r.reversed_count))?;
    }
    Ok(format!("{ZERO_REVERSAL_GRAPHS} forward-reachable graphs"))
}

fn split_fixture() -> Outcome {
    // hand trace: arcs sorted (a,obj,x) (e,agt,a) (e,obj,x); only e is
    // associated, so (e,agt,a) goes first, then (a,obj,x), then (e,obj,x)
    let arcs = vec![("e", "agt".to_string(), "a"), ("e", "obj".to_string(), "x"), ("a", "obj".to_string(), "x")];
    let t = convert_arcs("e", &arcs, &["e", "a", "x"]).map_err(|e| e.to_string())?;
    let shape: Vec<(&str, &str, Option<usize>)> = t.nodes.iter().map(|n| (n.vertex, n.label.as_str(), n.parent)).collect();
    let want = vec![("e", "entry", None), ("a", "agt", Some(0)), ("x", "obj", Some(1)), ("x", "obj", Some(0))];
    ensure(shape == want, || format!("level tree {shape:?}"))?;
    let text = "[unl]\nagt(e.@entry, a)\nobj(e, x)\nobj(a, x)\n[/unl]\n";
    let r = graph_to_tree(&bare_transfer(text)).map_err(|e| e.to_string())?;
    let b = r.tree.to_bracketed();
    ensure(b == "(entry e#1 (agt a#2 (obj x#3)) (obj x#3))", || format!("tree {b}"))?;
    ensure(r.association[&NodeId(3)].len() == 2 && r.reversed_count == 0, || "association".into())?;
    Ok(b)
}

/// Exhaustive oracle: headword mismatch 10, one per restriction on one side only.
fn oracle_distance(w: &Uw, x: &Uw) -> f64 {
    if w == x {
        return 0.0;
    }
    let rs = |u: &Uw| u.restrictions.iter().map(|r| r.to_string()).collect::<BTreeSet<_>>();
    let (a, b) = (rs(w), rs(x));
    let hw = if w.headword == x.headword { 0.0 } else { 10.0 };
    hw + a.symmetric_difference(&b).count() as f64
}

fn random_uw(rng: &mut rand_chacha::ChaCha8Rng) -> String {
    const HW: [&str; 6] = ["chair", "seat", "table", "bench", "stool", "sofa"];
    const RS: [&str; 6] = ["icl>furniture", "icl>thing", "equ>seat", "agt>person", "obj>thing", "icl>object"];
    let hw = HW[rng.random_range(0..HW.len())];
    let mut picked: Vec<&str> = RS.iter().copied().filter(|_| rng.random_bool(0.35)).collect();
    picked.dedup();
    if picked.is_empty() {
        hw.to_string()
    } else {
        format!("{hw}({})", picked.join(","))
    }
}

fn localization_minimizer() -> Outcome {
    let mut rng = rng(4);
    let profile = Profile::default();
    let mut ties = 0;
    for k in 0..LOCALIZE_INSTANCES {
        let size = rng.random_range(1..=LOCALIZE_MAX_DICT);
        let mut rows = BTreeSet::new();
        for _ in 0..size {
            rows.insert(random_uw(&mut rng));
        }
        let dict: String = rows.iter().map(|u| format!("{u}\tx\tN\t-\t1\n")).collect();
        let mut lex = Lexicon::new();
        lex.add_dictionary(Dictionary::parse("d", &dict).map_err(|e| e.to_string())?);
        let w = random_uw(&mut rng);
        let g = parse_document(&format!("[unl]\n{w}.@entry\n[/unl]\n")).unwrap().utterances.remove(0).graph;
        let (_, choices) = localize_lexically(&g, &lex, &Incompatibilities::default(), &profile, &AssocCounts::default(), k as u64, None)
            .map_err(|e| e.to_string())?;
        let w = &g.nodes[0].uw;
        let dists: Vec<(f64, &Uw)> = lex.uws().iter().map(|x| (oracle_distance(w, x), x)).collect();
        let best = dists.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
        let tie_set: Vec<&Uw> = dists.iter().filter(|d| (d.0 - best).abs() <= DIST_TOL).map(|d| d.1).collect();
        ties += usize::from(tie_set.len() > 1);
        let chosen = choices[0].chosen.as_ref().ok_or_else(|| format!("instance {k}: nothing chosen"))?;
        ensure((oracle_distance(w, chosen) - best).abs() <= DIST_TOL, || {
            format!("instance {k}: chose {chosen} at {} but min is {best}", oracle_distance(w, chosen))
        })?;
        ensure(tie_set.contains(&chosen), || format!("instance {k}: {chosen} outside tie set"))?;
    }
    Ok(format!("{LOCALIZE_INSTANCES} instances, {ties} with ties"))
}

fn determinism() -> Outcome {
    let lw = demo();
    let cases = golden();
    ensure(cases.len() >= 10, || format!("only {} corpus graphs", cases.len()))?;
    let snapshot = |c: &GoldenCase| {
        let st = run(&lw, &c.utterance, &c.profile, SEED, &AssocCounts::default());
        let mut s: Vec<String> = Stage::ALL.iter().map(|&x| st.stage_json(x).unwrap()).collect();
        s.push(st.rendering(true).unwrap());
        s
    };
    let first: Vec<Vec<String>> = cases.iter().map(snapshot).collect();
    for r in 1..DETERMINISM_REPEATS {
        for (c, want) in cases.iter().zip(&first) {
            ensure(&snapshot(c) == want, || format!("{} differs on repeat {r}", c.file))?;
        }
    }
    Ok(format!("{} graphs x {DETERMINISM_REPEATS} runs", cases.len()))
}

fn golden_corpus() -> Outcome {
    let lw = demo();
    let cases = golden();
    let mut out = Vec::new();
    for c in &cases {
        let got = run(&lw, &c.utterance, &c.profile, SEED, &AssocCounts::default()).rendering(false).unwrap();
        ensure(got == c.sentence, || format!("{} ({}): got {got:?}, want {:?}", c.file, c.profile, c.sentence))?;
        out.push(got);
    }
    let all = out.join(" ");
    ensure(all.contains("L'"), || "no elision case".into())?;
    ensure(out.iter().any(|s| s.contains(" ne ") && s.contains(" pas ")), || "no ne ... pas case".into())?;
    ensure(all.contains("Les chats mangent"), || "no plural agreement case".into())?;
    Ok(format!("{} sentences", cases.len()))
}

fn trace_totality() -> Outcome {
    let lw = demo();
    let mut content = 0;
    for c in golden() {
        let st = run(&lw, &c.utterance, &c.profile, SEED, &AssocCounts::default());
        let umc = st.stages.umc.as_ref().unwrap();
        let surface = st.stages.surface.as_ref().unwrap();
        for tok in &surface.tokens {
            for &i in &tok.marks {
                let leaf = umc.find_umc(i).ok_or_else(|| format!("{}: no leaf {i}", c.file))?;
                let chain = unl_deconv::pipeline::resolve_trace(&st, i);
                let unl: Vec<u32> = chain.iter().filter(|l| l.stage == TraceStage::Unl).map(|l| l.id).collect();
                if !leaf.created {
                    content += 1;
                    ensure(unl.len() == 1 && chain.len() == 5, || format!("{}: token {:?} chain {chain:?}", c.file, tok.text))?;
                    ensure(Some(NodeId(unl[0])) == leaf.unl, || format!("{}: wrong n", c.file))?;
                }
            }
        }
        let marked = st.rendering(true).unwrap();
        let plain = generate(umc, &lw.morph, false).map_err(|e| e.to_string())?.rendered;
        ensure(strip_marks(&marked) == plain, || format!("{}: {marked:?} vs {plain:?}", c.file))?;
    }
    Ok(format!("{content} content tokens traced"))
}

fn learning() -> Outcome {
    let lw = demo();
    let utt = corpus_file("teacher-finds-chair.unl");
    let node = NodeId(3);
    let word = |st: &unl_deconv::pipeline::UtteranceState| {
        st.transfer_choices.iter().find(|c| c.node == node).and_then(|c| c.chosen.clone()).unwrap()
    };
    let seeds = 0..16u64;
    let before: BTreeSet<String> = seeds.clone().map(|s| word(&run(&lw, &utt, "default", s, &AssocCounts::default()))).collect();
    ensure(before.len() == 2, || format!("base tie not visible across seeds: {before:?}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("counts.log");
    let store = CountStore::open(&path).map_err(|e| e.to_string())?;
    let mut st = run(&lw, &utt, "default", SEED, &store.snapshot());
    let target = if word(&st) == "chaise" { "fauteuil" } else { "chaise" };
    edit_and_redeconvert(&mut st, Edit::ChooseLu { node, lu: target.into() }, Policy::Always, &lw, &store).map_err(|e| e.to_string())?;
    ensure(word(&st) == target, || "edit not applied".into())?;
    let after = |counts: &AssocCounts| -> BTreeSet<String> { seeds.clone().map(|s| word(&run(&lw, &utt, "default", s, counts))).collect() };
    let live = after(&store.snapshot());
    ensure(live == BTreeSet::from([target.to_string()]), || format!("after one edit: {live:?}"))?;
    drop(store);
    let reopened = CountStore::open(&path).map_err(|e| e.to_string())?;
    let counts = reopened.snapshot();
    ensure(counts.get(PairKind::Uw2Lu, "chair(icl>furniture)", target) == 1, || "count lost on reload".into())?;
    let reloaded = after(&counts);
    ensure(reloaded == live, || format!("after reload: {reloaded:?}"))?;
    Ok(format!("{before:?} -> {{{target}}} over 16 seeds, survives reload"))
}

fn edit_locality() -> Outcome {
    let lw = demo();
    let store = CountStore::in_memory();
    let mut st = run(&lw, &corpus_file("teacher-finds-chair.unl"), "default", SEED, &store.snapshot());
    let before: BTreeMap<Stage, String> = Stage::ALL.iter().map(|&s| (s, st.stage_json(s).unwrap())).collect();
    let current = st.transfer_choices.iter().find(|c| c.node == NodeId(3)).unwrap().chosen.clone().unwrap();
    let other = if current == "chaise" { "fauteuil" } else { "chaise" };
    edit_and_redeconvert(&mut st, Edit::ChooseLu { node: NodeId(3), lu: other.into() }, Policy::Always, &lw, &store).map_err(|e| e.to_string())?;
    for s in [Stage::Validated, Stage::Localized] {
        ensure(st.stage_json(s).as_ref() == Some(&before[&s]), || format!("choose-lu changed {s}"))?;
    }
    for s in [Stage::Transferred, Stage::Surface] {
        ensure(st.stage_json(s).as_ref() != Some(&before[&s]), || format!("choose-lu left {s} unchanged"))?;
    }

    let mut st = run(&lw, &corpus_file("cat-eats-mouse.unl"), "default", SEED, &store.snapshot());
    let before: BTreeMap<Stage, String> = Stage::ALL.iter().map(|&s| (s, st.stage_json(s).unwrap())).collect();
    let edit = Edit::SetAttribute {
        level: unl_deconv::pipeline::AttrLevel::Interlingual,
        node: NodeId(2),
        name: "number".into(),
        value: "pl".into(),
    };
    let ran = edit_and_redeconvert(&mut st, edit, Policy::OnDemand, &lw, &store).map_err(|e| e.to_string())?;
    ensure(!ran, || "on-demand policy ran".into())?;
    ensure(st.stage_json(Stage::Validated).as_ref() == Some(&before[&Stage::Validated]), || "validated changed".into())?;
    let absent: Vec<Stage> = Stage::ALL.into_iter().filter(|s| !st.stages.has(*s)).collect();
    ensure(absent == Stage::ALL[1..].to_vec() && st.dirty_from == Some(Stage::Localized), || format!("invalidated {absent:?}"))?;
    st.run(&lw, &store.snapshot(), None).map_err(|e| e.to_string())?;
    ensure(st.stage_json(Stage::Validated).as_ref() == Some(&before[&Stage::Validated]), || "validated changed".into())?;
    for s in &Stage::ALL[1..] {
        ensure(st.stage_json(*s).as_ref() != Some(&before[s]), || format!("{s} not regenerated"))?;
    }
    let out = st.rendering(false).unwrap();
    ensure(out == "Les chats mangent la souris.", || format!("plural edit gave {out:?}"))?;
    Ok(format!("choose-lu keeps 2 stages, attribute edit regenerates 7: {out}"))
}

fn rewrite_safety() -> Outcome {
    let lw = demo();
    let schema = &lw.packs.schema;
    let gma = run(&lw, &corpus_file("cat-eats-mouse.unl"), "default", SEED, &AssocCounts::default()).stages.gma.unwrap();
    for cap in [1usize, 7, 50, 1000] {
        let text = format!(
            "GRAMMAR loop\nMAXITER {cap}\nRULE up PRIORITY 2 : ?x{{CAT=N, NUM=SG}} ==> ?x{{NUM=PL}}.\nRULE down PRIORITY 1 : ?x{{CAT=N, NUM=PL}} ==> ?x{{NUM=SG}}.\n"
        );
        let g = compile_grammar("loop", &text, schema).map_err(|e| e.to_string())?;
        let mut t = gma.clone();
        match run_grammar(&g, &mut t, schema) {
            Err(RewriteError::IterationLimit { limit, .. }) if limit == cap => {}
            other => return Err(format!("cap {cap}: {other:?}")),
        }
    }
    let mut n = 0;
    for c in golden() {
        let st = run(&lw, &c.utterance, &c.profile, SEED, &AssocCounts::default());
        check_projective(st.stages.umc.as_ref().unwrap()).map_err(|e| format!("{}: {e}", c.file))?;
        n += 1;
    }
    Ok(format!("IterationLimit at caps 1/7/50/1000, {n} UMC trees projective"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("graph-to-tree conservation", g2t_conservation),
        ("graph-to-tree totality", g2t_totality),
        ("zero reversal", zero_reversal),
        ("split correctness", split_fixture),
        ("localization minimizer", localization_minimizer),
        ("determinism", determinism),
        ("golden corpus", golden_corpus),
        ("trace totality", trace_totality),
        ("learning", learning),
        ("edit locality", edit_locality),
        ("rewrite-engine safety", rewrite_safety),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
