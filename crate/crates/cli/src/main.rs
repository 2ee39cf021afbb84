use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use ctxlink::agreement::{self, ItemUniverse};
use ctxlink::classifiers::ModelKind;
use ctxlink::config::RunConfig;
use ctxlink::corpus::{load_corpus, read_corpus, validate_corpus, write_corpus, ContextCategory, Corpus};
use ctxlink::eval::{self, SignalSpec, SynthParams};
use ctxlink::features::{pair_json_line, FeatureExtractor};
use ctxlink::instances::{build_candidates, candidate_json_line, CandidateCounts};
use ctxlink::{convert, Error, Result};

/// Positive candidate count of the reference corpus, printed by `stats` for
/// comparison.
const REFERENCE_POSITIVES: usize = 2523;
const REFERENCE_NEGATIVES: usize = 20_000;

#[derive(Parser)]
#[command(name = "ctxlink", version, about = "Event/context association experiments")]
struct Cli {
    /// TOML run configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus and report validation errors and warnings.
    Validate { corpus: Option<PathBuf> },
    /// Print document, mention and candidate counts.
    Stats {
        corpus: Option<PathBuf>,
        /// Count every context category, not only species, tissue type and
        /// cell line.
        #[arg(long)]
        all_categories: bool,
        /// Print the counts as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run cross-validation and write the report files.
    Cv(CvArgs),
    /// Inter-annotator agreement per context type.
    Agreement(AgreementArgs),
    /// Write a synthetic corpus.
    Synth(SynthArgs),
    /// Convert a tabular annotation tree to the JSON corpus format.
    Convert {
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write candidates.jsonl and pairs.jsonl for inspection.
    Dump {
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated model list (baseline, lr, svm, rf, nn).
    #[arg(long, value_delimiter = ',')]
    models: Vec<ModelKind>,
    /// Number of feature subsets searched per fold.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Worker threads; defaults to the config file, then $CTXLINK_WORKERS,
    /// then the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Keep every context category instead of species, tissue type and cell
    /// line only.
    #[arg(long)]
    all_categories: bool,
}

#[derive(Args)]
struct AgreementArgs {
    /// Annotator judgment files (at least two).
    #[arg(long, num_args = 1.., required = true)]
    annotators: Vec<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Manually annotated context spans, compared with the corpus mentions.
    #[arg(long)]
    manual_spans: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rate only events for which some annotator proposed the type.
    #[arg(long)]
    proposed_only: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    papers: Option<usize>,
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    contexts: Option<usize>,
    #[arg(long)]
    sentences: Option<usize>,
    /// Size of the grounding pool.
    #[arg(long)]
    types: Option<usize>,
    /// window:<w>, distfreq:<noise> or random:<rate>.
    #[arg(long)]
    signal: Option<SignalSpec>,
}

fn corpus_path(arg: Option<PathBuf>, config: &RunConfig) -> Result<PathBuf> {
    arg.or_else(|| config.corpus.clone())
        .ok_or_else(|| Error::Config("no corpus path given".into()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_validate(path: &Path) -> Result<bool> {
    let corpus = read_corpus(path)?;
    let report = validate_corpus(&corpus);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for e in &report.errors {
        println!("error: {e}");
    }
    println!(
        "{} documents, {} errors, {} warnings",
        corpus.documents.len(),
        report.errors.len(),
        report.warnings.len()
    );
    Ok(!report.has_errors())
}

fn stats_json(corpus: &Corpus) -> serde_json::Value {
    let counts = corpus
        .documents
        .iter()
        .map(|d| CandidateCounts::of(&build_candidates(d)))
        .fold(CandidateCounts::default(), |mut a, c| {
            a += c;
            a
        });
    let types: BTreeSet<&str> = corpus
        .documents
        .iter()
        .flat_map(|d| d.contexts.iter().map(|c| c.grounding_id.as_str()))
        .collect();
    serde_json::json!({
        "documents": corpus.documents.len(),
        "events": corpus.documents.iter().map(|d| d.events.len()).sum::<usize>(),
        "context_mentions": corpus.documents.iter().map(|d| d.contexts.len()).sum::<usize>(),
        "context_types": types.len(),
        "positive_candidates": counts.positive,
        "negative_candidates": counts.negative,
        "reference_positive_candidates": REFERENCE_POSITIVES,
        "reference_negative_candidates": REFERENCE_NEGATIVES,
    })
}

fn cmd_stats(path: &Path, restrict: bool, json: bool) -> Result<()> {
    let mut corpus = load_corpus(path)?;
    if restrict {
        corpus = corpus.retain_categories(&ContextCategory::RESTRICTED);
    }
    let s = stats_json(&corpus);
    if json {
        println!("{}", serde_json::to_string_pretty(&s)?);
        return Ok(());
    }
    for key in [
        "documents",
        "events",
        "context_mentions",
        "context_types",
        "positive_candidates",
        "negative_candidates",
    ] {
        println!("{key:<22} {}", s[key]);
    }
    let (pos, neg) = (s["positive_candidates"].as_u64().unwrap_or(0), s["negative_candidates"].as_u64().unwrap_or(0));
    if pos > 0 {
        println!("{:<22} 1:{:.2}", "pos:neg ratio", neg as f64 / pos as f64);
    }
    println!("{:<22} {REFERENCE_POSITIVES} positive, ~{REFERENCE_NEGATIVES} negative", "reference corpus");
    Ok(())
}

fn cmd_cv(args: CvArgs, mut config: RunConfig) -> Result<()> {
    if args.seed.is_some() {
        config.master_seed = args.seed;
    }
    if !args.models.is_empty() {
        config.models = args.models;
    }
    if args.budget.is_some() {
        config.search_budget = args.budget;
    }
    if let Some(b) = args.bootstrap {
        config.bootstrap_iterations = b;
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    if args.all_categories {
        config.restrict_categories = false;
    }
    if let Some(out) = args.out {
        config.output = out;
    }
    let corpus = load_corpus(&corpus_path(args.corpus, &config)?)?;
    let experiment = config.experiment()?;
    let workers = config.resolve_workers()?;
    info!("running with {workers} workers, config {}", experiment.hash());
    let report = eval::run_experiment(&corpus, &experiment, workers)?;
    for path in eval::write_reports(&config.output, &report)? {
        info!("wrote {}", path.display());
    }
    print!("{}", eval::summary_table(&report));
    for b in &report.bootstrap {
        println!(
            "bootstrap {:<22} {:.3}{}",
            b.model.name(),
            b.fraction,
            if b.significant { " significant" } else { "" }
        );
    }
    Ok(())
}

fn cmd_agreement(args: AgreementArgs, config: &RunConfig) -> Result<()> {
    let annotators = args
        .annotators
        .iter()
        .map(|p| agreement::load_judgments(p))
        .collect::<Result<Vec<_>>>()?;
    let corpus = match args.corpus.or_else(|| config.corpus.clone()) {
        Some(p) => load_corpus(&p)?,
        None => Corpus::default(),
    };
    let universe = if args.proposed_only {
        ItemUniverse::Proposed
    } else {
        config.item_universe
    };
    let report = agreement::kappa_report(&annotators, &corpus, universe)?;
    let out = args.out.unwrap_or_else(|| config.output.clone());
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_file(&out.join("kappa.csv"), &agreement::kappa_csv(&report)?)?;
    write_file(&out.join("kappa_bins.csv"), &agreement::bins_csv(&report)?)?;
    write_file(&out.join("kappa_top.csv"), &agreement::top_csv(&report)?)?;
    write_file(&out.join("agreement.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    if let Some(spans) = args.manual_spans {
        let overlap = agreement::overlap_report(&agreement::load_manual_spans(&spans)?, &corpus)?;
        write_file(&out.join("overlap.json"), &(serde_json::to_string_pretty(&overlap)? + "\n"))?;
        println!(
            "overlap: both {}, manual only {}, corpus only {}, jaccard {:.3}",
            overlap.total.both, overlap.total.only_a, overlap.total.only_b, overlap.total.jaccard
        );
    }
    println!("{} papers, {} context types", report.papers.len(), report.types.len());
    for t in &report.types {
        println!("{:<32} {:>10} {:>6}", t.context_type, t.kappa.to_string(), t.associations);
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, config: &RunConfig) -> Result<()> {
    let d = SynthParams::default();
    let params = SynthParams {
        seed: args.seed.or(config.master_seed).unwrap_or(d.seed),
        n_papers: args.papers.unwrap_or(d.n_papers),
        events_per_paper: args.events.unwrap_or(d.events_per_paper),
        contexts_per_paper: args.contexts.unwrap_or(d.contexts_per_paper),
        sentences_per_paper: args.sentences.unwrap_or(d.sentences_per_paper),
        context_types: args.types.unwrap_or(d.context_types),
        signal: args.signal.unwrap_or(d.signal),
    };
    let corpus = eval::generate_synthetic_corpus(&params)?;
    let files = write_corpus(&args.out, &corpus)?;
    println!("wrote {} papers to {}", files.len(), args.out.display());
    Ok(())
}

fn cmd_convert(source: &Path, out: &Path) -> Result<()> {
    let conv = convert::convert_tree(source)?;
    for issue in &conv.discrepancies {
        println!("discrepancy: {issue}");
    }
    let report = validate_corpus(&conv.corpus);
    for e in &report.errors {
        println!("error: {e}");
    }
    let files = write_corpus(out, &conv.corpus)?;
    println!(
        "converted {} papers, {} discrepancies, {} validation errors",
        files.len(),
        conv.discrepancies.len(),
        report.errors.len()
    );
    Ok(())
}

fn cmd_dump(path: &Path, out: &Path) -> Result<()> {
    let corpus = load_corpus(path)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (mut cands, mut pairs) = (String::new(), String::new());
    for doc in &corpus.documents {
        let ex = FeatureExtractor::new(doc);
        for c in build_candidates(doc) {
            cands.push_str(&candidate_json_line(doc, &c));
            cands.push('\n');
            for &p in &c.pairs {
                pairs.push_str(&pair_json_line(doc, p, &ex.extract(p)));
                pairs.push('\n');
            }
        }
    }
    write_file(&out.join("candidates.jsonl"), &cands)?;
    write_file(&out.join("pairs.jsonl"), &pairs)
}

fn run(cli: Cli) -> Result<bool> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Validate { corpus } => return cmd_validate(&corpus_path(corpus, &config)?),
        Command::Stats {
            corpus,
            all_categories,
            json,
        } => cmd_stats(
            &corpus_path(corpus, &config)?,
            config.restrict_categories && !all_categories,
            json,
        )?,
        Command::Cv(args) => cmd_cv(args, config)?,
        Command::Agreement(args) => cmd_agreement(args, &config)?,
        Command::Synth(args) => cmd_synth(args, &config)?,
        Command::Convert { source, out } => cmd_convert(&source, &out)?,
        Command::Dump { corpus, out } => cmd_dump(&corpus_path(corpus, &config)?, &out)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e}");
            if e.is_environmental() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
