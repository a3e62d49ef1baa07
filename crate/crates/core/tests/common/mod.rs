#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unl_deconv::lexicon::{AssocCounts, Profile};
use unl_deconv::pipeline::{deconvert, Config, Lingware, UtteranceState};
use unl_deconv::transfer::{transfer_lexically, MissingPolicy, RestrictionVars, TransferInput, TransferredGraph};
use unl_deconv::lexicon::Lexicon;
use unl_deconv::unl::{parse_document, Utterance};

pub fn lingware_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("lingware")
}

pub fn demo() -> Lingware {
    Lingware::load_dir(&lingware_root().join("fr-demo")).expect("demo lingware loads")
}

pub struct GoldenCase {
    pub file: String,
    pub profile: String,
    pub sentence: String,
    pub utterance: Utterance,
}

pub fn golden() -> Vec<GoldenCase> {
    let dir = lingware_root().join("corpus");
    let table = std::fs::read_to_string(dir.join("golden.tsv")).unwrap();
    table
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            let text = std::fs::read_to_string(dir.join(cols[0])).unwrap();
            GoldenCase {
                file: cols[0].into(),
                profile: cols[1].into(),
                sentence: cols[2].into(),
                utterance: parse_document(&text).unwrap().utterances.remove(0),
            }
        })
        .collect()
}

pub fn corpus_file(name: &str) -> Utterance {
    let text = std::fs::read_to_string(lingware_root().join("corpus").join(name)).unwrap();
    parse_document(&text).unwrap().utterances.remove(0)
}

pub fn run(lw: &Lingware, utt: &Utterance, profile: &str, seed: u64, counts: &AssocCounts) -> UtteranceState {
    let cfg = Config {
        profile: profile.into(),
        seed,
        ..Config::default()
    };
    deconvert("u1", utt, lw, &cfg, counts, None).expect("deconverts")
}

/// Arc list over nodes `0..k` as `(source, label, target)`.
pub type Arcs = Vec<(usize, &'static str, usize)>;

pub const LABELS: [&str; 6] = ["agt", "obj", "mod", "plc", "tim", "ben"];

/// A weakly connected graph with `m` arcs on distinct ordered pairs.
/// With `forward`, every node is reachable from node 0 along arc direction.
pub fn connected_arcs(rng: &mut ChaCha8Rng, m: usize, forward: bool) -> (usize, Arcs) {
    let mut k = rng.random_range(2..=(m + 1).min(30));
    while k * (k - 1) < m {
        k += 1;
    }
    let mut pairs = BTreeSet::new();
    let mut arcs = Arcs::new();
    for v in 1..k {
        let u = rng.random_range(0..v);
        let (a, b) = if forward || rng.random_bool(0.5) { (u, v) } else { (v, u) };
        pairs.insert((a, b));
        arcs.push((a, LABELS[rng.random_range(0..LABELS.len())], b));
    }
    while arcs.len() < m {
        let a = rng.random_range(0..k);
        let b = rng.random_range(0..k);
        if a != b && pairs.insert((a, b)) {
            arcs.push((a, LABELS[rng.random_range(0..LABELS.len())], b));
        }
    }
    (k, arcs)
}

/// UNL text for an arc list over `k` nodes with `entry` marked; nodes not
/// touched by any arc are declared alone.
pub fn unl_text(k: usize, arcs: &Arcs, entry: usize) -> String {
    let term = |i: usize, seen: &mut BTreeSet<usize>| {
        let mut t = format!("w{i}(icl>thing)");
        if seen.insert(i) && i == entry {
            t.push_str(".@entry");
        }
        t
    };
    let mut seen = BTreeSet::new();
    let mut out = String::from("[unl]\n");
    for (a, l, b) in arcs {
        let ta = term(*a, &mut seen);
        let tb = term(*b, &mut seen);
        out.push_str(&format!("{l}({ta}, {tb})\n"));
    }
    for i in 0..k {
        if !seen.contains(&i) {
            out.push_str(&term(i, &mut seen));
            out.push('\n');
        }
    }
    out.push_str("[/unl]\n");
    out
}

/// Transfer with an empty lexicon: every node stays untranslated.
pub fn bare_transfer(text: &str) -> TransferredGraph {
    let g = parse_document(text).expect("generated text parses").utterances.remove(0).graph;
    let input = TransferInput {
        lexicon: &Lexicon::new(),
        restriction_vars: &RestrictionVars::default(),
        profile: &Profile::default(),
        counts: &AssocCounts::default(),
        seed: 0,
        overrides: &Default::default(),
        missing: MissingPolicy::Untranslated,
    };
    transfer_lexically(&g, &input, None).unwrap().0
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
