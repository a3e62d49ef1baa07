//! `deconv`: run, inspect and serve the UNL deconverter.
//!
//! Exit status is 0 on success, 1 for bad input (unreadable or malformed
//! graph files, validation failures, unknown profile) and 2 for lingware
//! errors (missing or inconsistent linguistic files, failing rule packs).

use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unl_deconv::graph2tree::graph_to_tree;
use unl_deconv::lexicon::{AssocCounts, CountStore, Lexicon, Profile, ScoredEntry};
use unl_deconv::localize::{Candidate, Chooser};
use unl_deconv::pipeline::{deconvert, deconvert_document, utterance_id, Config, Lingware, LingwarePaths, PipelineError};
use unl_deconv::transfer::{transfer_lexically, MissingPolicy, RestrictionVars, TransferInput};
use unl_deconv::unl::{parse_document, Inventory, NodeId, UnlDocument, Uw};
use unl_deconv::validate::validate;
use unl_deconv_service::{serve, AppState};

/// Inventory used when none is given.
const DEFAULT_INVENTORY: &str = include_str!("../../core/lingware/fr-demo/inventory.cfg");

#[derive(Parser)]
#[command(name = "deconv", version, about = "Deconvert UNL graphs into text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deconvert every utterance of a UNL document.
    Run(RunArgs),
    /// Print the tree built from each utterance graph.
    G2t {
        file: PathBuf,
        #[arg(long)]
        inventory: Option<PathBuf>,
    },
    /// Validate every utterance graph and print the reports.
    Validate {
        file: PathBuf,
        #[arg(long)]
        inventory: Option<PathBuf>,
    },
    /// Serve the postedition API on localhost.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        session_dir: Option<PathBuf>,
        #[command(flatten)]
        lingware: LingwareArgs,
        #[arg(long)]
        counts: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LingwareArgs {
    /// Directory in the conventional layout; the flags below override its files.
    #[arg(long)]
    lingware: Option<PathBuf>,
    /// Dictionary file; repeat for several.
    #[arg(long)]
    dict: Vec<PathBuf>,
    #[arg(long)]
    lus: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    ts: Option<PathBuf>,
    #[arg(long)]
    gs1: Option<PathBuf>,
    #[arg(long)]
    gs2: Option<PathBuf>,
    /// Morphology pack directory.
    #[arg(long)]
    morph: Option<PathBuf>,
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    inventory: Option<PathBuf>,
    #[arg(long)]
    incompat: Option<PathBuf>,
    #[arg(long)]
    restrictions: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    #[command(flatten)]
    lingware: LingwareArgs,
    #[arg(long, default_value = "default")]
    profile: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Ask on stdin whenever localization or transfer has a choice.
    #[arg(long)]
    interactive: bool,
    /// Prefix every token with its `&i_` index.
    #[arg(long)]
    marks: bool,
    /// Association count log to read (created if missing).
    #[arg(long)]
    counts: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Lingware(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Lingware(_) => 2,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Lingware(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_document(path: &Path) -> Result<UnlDocument, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn inventory(path: Option<&Path>) -> Result<Inventory, Failure> {
    match path {
        Some(p) => Inventory::load(p).map_err(|e| Failure::Lingware(format!("{}: {e}", p.display()))),
        None => Ok(Inventory::parse(DEFAULT_INVENTORY).expect("bundled inventory parses")),
    }
}

fn load_lingware(a: &LingwareArgs) -> Result<Lingware, Failure> {
    let base = a.lingware.as_deref().map(LingwarePaths::in_dir);
    let pick = |flag: &Option<PathBuf>, from_dir: Option<PathBuf>, name: &str| {
        flag.clone()
            .or(from_dir)
            .ok_or_else(|| Failure::Lingware(format!("no {name} given (use --{name} or --lingware)")))
    };
    let b = base.as_ref();
    let dictionaries = if a.dict.is_empty() {
        b.map(|b| b.dictionaries.clone())
            .ok_or_else(|| Failure::Lingware("no dictionary given (use --dict or --lingware)".into()))?
    } else {
        a.dict.clone()
    };
    let paths = LingwarePaths {
        inventory: a.inventory.clone().or(b.map(|b| b.inventory.clone())).unwrap_or_default(),
        dictionaries,
        lus: pick(&a.lus, b.map(|b| b.lus.clone()), "lus")?,
        schema: pick(&a.schema, b.map(|b| b.schema.clone()), "schema")?,
        ts: pick(&a.ts, b.map(|b| b.ts.clone()), "ts")?,
        gs1: pick(&a.gs1, b.map(|b| b.gs1.clone()), "gs1")?,
        gs2: pick(&a.gs2, b.map(|b| b.gs2.clone()), "gs2")?,
        morph: pick(&a.morph, b.map(|b| b.morph.clone()), "morph")?,
        profiles: a.profiles.clone().or(b.and_then(|b| b.profiles.clone())),
        incompat: a.incompat.clone().or(b.and_then(|b| b.incompat.clone())),
        restrictions: a.restrictions.clone().or(b.and_then(|b| b.restrictions.clone())),
    };
    let loaded = if paths.inventory.as_os_str().is_empty() {
        Lingware::load_with_inventory(&paths, inventory(None)?)
    } else {
        Lingware::load(&paths)
    };
    loaded.map_err(|e| Failure::Lingware(e.to_string()))
}

fn open_counts(path: Option<&Path>) -> Result<CountStore, Failure> {
    match path {
        Some(p) => CountStore::open(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => Ok(CountStore::in_memory()),
    }
}

/// Numbered menus on stderr, answers on stdin; an empty or unparsable
/// answer keeps the automatic choice.
struct Prompt<R> {
    input: R,
}

impl<R: BufRead> Prompt<R> {
    fn ask(&mut self, title: String, options: Vec<String>) -> Option<usize> {
        let mut err = io::stderr();
        let _ = writeln!(err, "{title}");
        for (k, o) in options.iter().enumerate() {
            let _ = writeln!(err, "  {}) {o}", k + 1);
        }
        let _ = write!(err, "choice [auto]: ");
        let _ = err.flush();
        let mut line = String::new();
        self.input.read_line(&mut line).ok()?;
        let k: usize = line.trim().parse().ok()?;
        (1..=options.len()).contains(&k).then(|| k - 1)
    }
}

impl<R: BufRead> Chooser for Prompt<R> {
    fn choose_uw(&mut self, node: NodeId, original: &Uw, candidates: &[Candidate]) -> Option<usize> {
        let options = candidates.iter().map(|c| format!("{} (distance {})", c.uw, c.distance)).collect();
        self.ask(format!("node {node}: {original} is not in the dictionary"), options)
    }

    fn choose_lu(&mut self, node: NodeId, uw: &Uw, candidates: &[ScoredEntry]) -> Option<usize> {
        let options = candidates.iter().map(|c| format!("{} (score {:.3})", c.entry.lu, c.score)).collect();
        self.ask(format!("node {node}: {uw}"), options)
    }
}

fn run(a: &RunArgs) -> Outcome {
    let doc = read_document(&a.file)?;
    let lw = load_lingware(&a.lingware)?;
    let counts = open_counts(a.counts.as_deref())?.snapshot();
    let config = Config {
        profile: a.profile.clone(),
        seed: a.seed,
        ..Config::default()
    };
    if lw.profile(&config.profile).is_none() {
        return Err(PipelineError::UnknownProfile(config.profile).into());
    }
    let results = if a.interactive {
        let mut prompt = Prompt { input: io::stdin().lock() };
        let mut out = Vec::new();
        for (i, u) in doc.utterances.iter().enumerate() {
            out.push(deconvert(&utterance_id(i), u, &lw, &config, &counts, Some(&mut prompt)));
        }
        out
    } else {
        deconvert_document(&doc, &lw, &config, &counts, true)
    };
    let total = results.len();
    let mut failed = 0;
    let mut lingware_fault = false;
    let mut stdout = io::stdout().lock();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(st) => {
                let _ = writeln!(stdout, "{}", st.rendering(a.marks).unwrap_or_default());
            }
            Err(e) => {
                match &e {
                    PipelineError::Invalid(report) => eprint!("{}: {report}", utterance_id(i)),
                    _ => eprintln!("{}: {e}", utterance_id(i)),
                }
                failed += 1;
                lingware_fault |= !e.is_input_error();
                let _ = writeln!(stdout);
            }
        }
    }
    let message = format!("{failed} of {total} utterances failed");
    match (failed, lingware_fault) {
        (0, _) => Ok(()),
        (_, true) => Err(Failure::Lingware(message)),
        _ => Err(Failure::Input(message)),
    }
}

fn g2t(file: &Path, inv: Option<&Path>) -> Outcome {
    let doc = read_document(file)?;
    let inventory = inventory(inv)?;
    let lexicon = Lexicon::new();
    let vars = RestrictionVars::default();
    let profile = Profile::default();
    let counts = AssocCounts::default();
    let overrides = Default::default();
    let input = TransferInput {
        lexicon: &lexicon,
        restriction_vars: &vars,
        profile: &profile,
        counts: &counts,
        seed: 0,
        overrides: &overrides,
        missing: MissingPolicy::Untranslated,
    };
    let mut failed = false;
    for (i, u) in doc.utterances.iter().enumerate() {
        let id = utterance_id(i);
        let report = validate(&u.graph, &inventory);
        if !report.ok {
            eprint!("{id}: {report}");
            failed = true;
            continue;
        }
        let tg = transfer_lexically(&u.graph, &input, None).map_err(|e| Failure::Input(format!("{id}: {e}")))?.0;
        match graph_to_tree(&tg) {
            Ok(r) => {
                println!("# {id}");
                print!("{}", r.tree.to_indented());
                println!("{}", r.tree.to_bracketed());
            }
            Err(e) => {
                eprintln!("{id}: {e}");
                failed = true;
            }
        }
    }
    if failed {
        return Err(Failure::Input("some graphs could not be converted".into()));
    }
    Ok(())
}

fn validate_file(file: &Path, inv: Option<&Path>) -> Outcome {
    let doc = read_document(file)?;
    let inventory = inventory(inv)?;
    let mut ok = true;
    for (i, u) in doc.utterances.iter().enumerate() {
        let report = validate(&u.graph, &inventory);
        ok &= report.ok;
        print!("{}: {report}", utterance_id(i));
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Input("validation failed".into()))
    }
}

fn serve_cmd(port: u16, session_dir: Option<PathBuf>, lingware: &LingwareArgs, counts: Option<&Path>) -> Outcome {
    let lw = load_lingware(lingware)?;
    let counts = open_counts(counts)?;
    if let Some(d) = &session_dir {
        std::fs::create_dir_all(d).map_err(|e| Failure::Input(format!("{}: {e}", d.display())))?;
    }
    let state = AppState::new(lw, counts, session_dir);
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Input(e.to_string()))?;
    eprintln!("listening on http://{addr}");
    rt.block_on(serve(addr, state)).map_err(|e| Failure::Input(format!("{addr}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => run(a),
        Command::G2t { file, inventory } => g2t(file, inventory.as_deref()),
        Command::Validate { file, inventory } => validate_file(file, inventory.as_deref()),
        Command::Serve {
            port,
            session_dir,
            lingware,
            counts,
        } => serve_cmd(*port, session_dir.clone(), lingware, counts.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) | Failure::Lingware(m) => eprintln!("deconv: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
