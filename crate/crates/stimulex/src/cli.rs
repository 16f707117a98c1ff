//! `stimulex <command> [--config FILE] [flags]`

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use stimulex_core::agreement::{aggregate, agreement_report};
use stimulex_core::align::AlignConfig;
use stimulex_core::analysis::{AnalysisError, corpus_stats, pos_context_stats};
use stimulex_core::crf::{FeatureConfig, Resources, TrainConfig, default_stopwords, train};
use stimulex_core::eval::{score, score_pair};
use stimulex_core::{Dataset, IobMode};

use crate::config::{ConfigFile, Effective};
use crate::error::Error;
use crate::format::{parse_corpus, write_corpus};
use crate::fsutil::Run;
use crate::ingest::{
    DEFAULT_DATE, DEFAULT_KEYWORDS, DEFAULT_MARKERS, IngestConfig, read_lexicon, read_raw,
    run_pipeline,
};
use crate::model_file::{load_model, save_model};
use crate::project::project_dataset;
use crate::reports;
use crate::translate::{Backend, Cache, Client, Http, Identity, Table};

#[derive(Debug, Parser)]
#[command(
    name = "stimulex",
    version,
    about = "Emotion stimulus span extraction over news headlines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter raw headlines into an unannotated corpus
    Ingest(IngestArgs),
    /// Inter-annotator agreement between two annotated copies of a corpus
    Agree(AgreeArgs),
    /// Seeded train/test split
    Split(SplitArgs),
    /// Train a CRF tagger
    Train(TrainArgs),
    /// Add a prediction layer with a trained model
    Tag(TagArgs),
    /// Project gold spans through machine translation
    Project(ProjectArgs),
    /// Score predictions against gold spans
    Eval(EvalArgs),
    /// Corpus statistics
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key=value file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    common: Common,
    /// Raw headlines, TEXT<TAB>SOURCE<TAB>DATE per line
    #[arg(long = "in")]
    input: Option<String>,
    /// Emotion lexicon, TERM<TAB>EMOTION per line
    #[arg(long)]
    lexicon: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Filter counts; printed to stdout when absent
    #[arg(long)]
    report: Option<String>,
    #[arg(long)]
    min_words: Option<usize>,
    /// Disqualifying first word (repeatable)
    #[arg(long)]
    keyword: Vec<String>,
    /// Regex for a generic marker to strip (repeatable)
    #[arg(long)]
    marker: Vec<String>,
    #[arg(long)]
    date_pattern: Option<String>,
}

#[derive(Debug, Args)]
struct AgreeArgs {
    #[command(flatten)]
    common: Common,
    /// First annotator; the reference for span F1
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    report: Option<String>,
    /// Write the aggregated corpus here
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    conflicts: Option<String>,
    /// Per-emotion kappa bar chart
    #[arg(long)]
    svg: Option<String>,
    /// Repair invalid gold IOB instead of rejecting it
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "in")]
    input: Option<String>,
    #[arg(long)]
    train: Option<String>,
    #[arg(long)]
    test: Option<String>,
    /// Training fraction, strictly between 0 and 1
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Training corpus (repeatable; files are concatenated)
    #[arg(long = "in")]
    input: Vec<String>,
    #[arg(long)]
    model: Option<String>,
    /// `all` or a comma list of corpus, linguistic, lexicon
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    lexicon: Option<String>,
    /// One stopword per line; a built-in list is used otherwise
    #[arg(long)]
    stopwords: Option<String>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    l2_sigma: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    memory: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optimizer summary
    #[arg(long)]
    report: Option<String>,
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct TagArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "in")]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Allow I after O and at sentence start
    #[arg(long)]
    unconstrained: bool,
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "in")]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// One JSON record per source span
    #[arg(long)]
    log: Option<String>,
    #[arg(long)]
    report: Option<String>,
    /// identity, table or http
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    /// SOURCE<TAB>TARGET lines for the table backend
    #[arg(long)]
    table: Option<String>,
    /// Append-only translation cache
    #[arg(long)]
    cache: Option<String>,
    /// Serve from the cache only; a miss fails the sentence
    #[arg(long)]
    offline: bool,
    #[arg(long)]
    source_lang: Option<String>,
    #[arg(long)]
    target_lang: Option<String>,
    #[arg(long)]
    fuzzy_threshold: Option<f64>,
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    gold: Option<String>,
    /// Prediction corpus; the gold file's own prediction layer otherwise
    #[arg(long)]
    pred: Option<String>,
    #[arg(long)]
    report: Option<String>,
    /// Row label in the report
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "in")]
    input: Option<String>,
    #[arg(long)]
    report: Option<String>,
    /// Machine-readable key=value output
    #[arg(long)]
    kv: Option<String>,
    /// Per-emotion stimulus share bar chart
    #[arg(long)]
    svg: Option<String>,
    #[arg(long)]
    lenient: bool,
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("stimulex: error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(c: Command) -> Result<(), Error> {
    match c {
        Command::Ingest(a) => ingest(a),
        Command::Agree(a) => agree(a),
        Command::Split(a) => split(a),
        Command::Train(a) => train_cmd(a),
        Command::Tag(a) => tag(a),
        Command::Project(a) => project(a),
        Command::Eval(a) => eval(a),
        Command::Analyze(a) => analyze(a),
    }
}

fn start(command: &str, common: &Common) -> Result<(Run, Effective), Error> {
    let mut run = Run::new(command);
    let cfg = match &common.config {
        Some(p) => ConfigFile::parse(&run.read(p)?)?,
        None => ConfigFile::default(),
    };
    Ok((run, Effective::new(cfg)))
}

fn need(e: &mut Effective, key: &str, flag: Option<String>) -> Result<PathBuf, Error> {
    e.opt(key, flag)?.map(PathBuf::from).ok_or_else(|| {
        Error::Usage(format!(
            "missing --{key} (or `{key} = ...` in the config file)"
        ))
    })
}

fn path_opt(e: &mut Effective, key: &str, flag: Option<String>) -> Result<Option<PathBuf>, Error> {
    Ok(e.opt(key, flag)?.map(PathBuf::from))
}

fn iob_mode(lenient: bool) -> IobMode {
    if lenient {
        IobMode::Lenient
    } else {
        IobMode::Strict
    }
}

fn read_corpus(run: &mut Run, path: &Path, mode: IobMode) -> Result<Dataset, Error> {
    let text = run.read(path)?;
    parse_corpus(&text, &path.display().to_string(), mode)
        .map_err(|e| Error::Format(path.to_path_buf(), e))
}

/// Either queue `text` as an output file or print it.
fn emit(run: &mut Run, path: Option<&Path>, text: String) {
    match path {
        Some(p) => run.output(p, text),
        None => print!("{text}"),
    }
}

fn ingest(a: IngestArgs) -> Result<(), Error> {
    let (mut run, mut e) = start("ingest", &a.common)?;
    let input = need(&mut e, "in", a.input)?;
    let lexicon = need(&mut e, "lexicon", a.lexicon)?;
    let out = need(&mut e, "out", a.out)?;
    let report = path_opt(&mut e, "report", a.report)?;
    let min_words = e.or("min-words", a.min_words, 5)?;
    let keywords = e.list("keyword", a.keyword, &DEFAULT_KEYWORDS);
    let markers = e.list("marker", a.marker, &DEFAULT_MARKERS);
    let date = e.or("date-pattern", a.date_pattern, DEFAULT_DATE.to_string())?;
    let cfg = IngestConfig::new(min_words, keywords, &markers, &date)?;

    let raw = read_raw(&run.read(&input)?).map_err(|err| Error::Input(input.clone(), err))?;
    let lex =
        read_lexicon(&run.read(&lexicon)?).map_err(|err| Error::Input(lexicon.clone(), err))?;
    let (d, filter) = run_pipeline(&raw, &lex, &cfg);
    run.output(&out, write_corpus(&d));
    emit(&mut run, report.as_deref(), reports::filter_kv(&filter));
    run.commit(&e)
}

fn agree(a: AgreeArgs) -> Result<(), Error> {
    let (mut run, mut e) = start("agree", &a.common)?;
    let pa = need(&mut e, "a", a.a)?;
    let pb = need(&mut e, "b", a.b)?;
    let report = need(&mut e, "report", a.report)?;
    let out = path_opt(&mut e, "out", a.out)?;
    let conflicts = path_opt(&mut e, "conflicts", a.conflicts)?;
    let svg = path_opt(&mut e, "svg", a.svg)?;
    let mode = iob_mode(e.flag("lenient", a.lenient)?);

    let da = read_corpus(&mut run, &pa, mode)?;
    let db = read_corpus(&mut run, &pb, mode)?;
    let r = agreement_report(&da, &db)?;
    let text = reports::agreement_kv(&r);
    print!("{text}");
    run.output(&report, text);
    if out.is_some() || conflicts.is_some() {
        let (agg, cs) = aggregate(&da, &db)?;
        if let Some(p) = out {
            run.output(&p, write_corpus(&agg));
        }
        if let Some(p) = conflicts {
            let mut t = String::new();
            for c in &cs {
                let _ = writeln!(t, "{c}");
            }
            run.output(&p, t);
        }
    }
    if let Some(p) = svg {
        run.output(
            &p,
            reports::bar_chart_svg("Cohen's kappa per emotion", &reports::kappa_bars(&r), 1.0),
        );
    }
    run.commit(&e)
}

/// Seeded shuffle of sentence positions, then a prefix cut; each part keeps
/// the input order.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((ratio * n as f64).round() as usize).min(n);
    let mut train = idx[..cut].to_vec();
    let mut test = idx[cut..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn split(a: SplitArgs) -> Result<(), Error> {
    let (mut run, mut e) = start("split", &a.common)?;
    let input = need(&mut e, "in", a.input)?;
    let train_p = need(&mut e, "train", a.train)?;
    let test_p = need(&mut e, "test", a.test)?;
    let ratio = e.or("ratio", a.ratio, 0.8)?;
    let seed = e.or("seed", a.seed, 0)?;
    let mode = iob_mode(e.flag("lenient", a.lenient)?);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Usage(format!(
            "--ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }

    let d = read_corpus(&mut run, &input, mode)?;
    let (tr, te) = split_indices(d.len(), ratio, seed);
    let pick = |ix: &[usize], name: &str| {
        Dataset::new(
            format!("{}:{name}", d.provenance),
            ix.iter().map(|&i| d.sentences()[i].clone()).collect(),
        )
    };
    run.output(&train_p, write_corpus(&pick(&tr, "train")?));
    run.output(&test_p, write_corpus(&pick(&te, "test")?));
    run.commit(&e)
}

fn read_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn train_cmd(a: TrainArgs) -> Result<(), Error> {
    let (mut run, mut e) = start("train", &a.common)?;
    let inputs = e.list("in", a.input, &[]);
    if inputs.is_empty() {
        return Err(Error::Usage(
            "missing --in (or `in = ...` in the config file)".into(),
        ));
    }
    let model_p = need(&mut e, "model", a.model)?;
    let families = e.or("features", a.features, "all".to_string())?;
    let lexicon = path_opt(&mut e, "lexicon", a.lexicon)?;
    let stopwords = path_opt(&mut e, "stopwords", a.stopwords)?;
    let report = path_opt(&mut e, "report", a.report)?;
    let mut fc = FeatureConfig::from_families(&families)
        .ok_or_else(|| Error::Usage(format!("unknown feature families `{families}`")))?;
    fc.top_k = e.or("top-k", a.top_k, fc.top_k)?;
    let d = TrainConfig::default();
    let tc = TrainConfig {
        l2_sigma: e.or("l2-sigma", a.l2_sigma, d.l2_sigma)?,
        max_iterations: e.or("max-iterations", a.max_iterations, d.max_iterations)?,
        tolerance: e.or("tolerance", a.tolerance, d.tolerance)?,
        max_features: e.or("max-features", a.max_features, d.max_features)?,
        memory: e.or("memory", a.memory, d.memory)?,
        seed: e.or("seed", a.seed, d.seed)?,
    };
    let mode = iob_mode(e.flag("lenient", a.lenient)?);
    if fc.lexicon && lexicon.is_none() {
        return Err(Error::Usage(
            "the lexicon feature family needs --lexicon".into(),
        ));
    }

    let mut resources = Resources {
        stopwords: default_stopwords(),
        ..Default::default()
    };
    if let Some(p) = &lexicon {
        resources.lexicon =
            read_lexicon(&run.read(p)?).map_err(|err| Error::Input(p.clone(), err))?;
    }
    if let Some(p) = &stopwords {
        resources.stopwords = read_stopwords(&run.read(p)?);
    }
    let mut parts = Vec::new();
    for p in &inputs {
        parts.push(read_corpus(&mut run, Path::new(p), mode)?);
    }
    let data = Dataset::concat(inputs.join("+"), parts)?;
    let (model, tr) = train(&data, &fc, &tc, resources)?;
    eprintln!(
        "trained on {} sentences: {} features, {} iterations, {:?}",
        tr.instances, tr.features, tr.iterations, tr.termination
    );
    run.output(&model_p, save_model(&model));
    if let Some(p) = report {
        run.output(&p, reports::train_kv(&tr));
    }
    run.commit(&e)
}

fn tag(a: TagArgs) -> Result<(), Error> {
    let (mut run, mut e) = start("tag", &a.common)?;
    let model_p = need(&mut e, "model", a.model)?;
    let input = need(&mut e, "in", a.input)?;
    let out = need(&mut e, "out", a.out)?;
    let unconstrained = e.flag("unconstrained", a.unconstrained)?;
    let mode = iob_mode(e.flag("lenient", a.lenient)?);

    let model =
        load_model(&run.read(&model_p)?).map_err(|err| Error::Model(model_p.clone(), err))?;
    let mut d = read_corpus(&mut run, &input, mode)?;
    for s in d.sentences_mut() {
        let pred = model.tag(s, !unconstrained)?;
        s.set_pred(Some(pred))?;
    }
    run.output(&out, write_corpus(&d));
    run.commit(&e)
}

fn project(a: ProjectArgs) -> Result<(), Error> {
    let (mut run, mut e) = start("project", &a.common)?;
    let input = need(&mut e, "in", a.input)?;
    let out = need(&mut e, "out", a.out)?;
    let log = need(&mut e, "log", a.log)?;
    let report = path_opt(&mut e, "report", a.report)?;
    let kind = e
        .opt("backend", a.backend)?
        .ok_or_else(|| Error::Usage("missing --backend (identity, table or http)".into()))?;
    let endpoint = e.opt("endpoint", a.endpoint)?;
    let table = path_opt(&mut e, "table", a.table)?;
    let cache_p = path_opt(&mut e, "cache", a.cache)?;
    let offline = e.flag("offline", a.offline)?;
    let src = e.or("source-lang", a.source_lang, "en".to_string())?;
    let tgt = e.or("target-lang", a.target_lang, "de".to_string())?;
    let threshold = e.or(
        "fuzzy-threshold",
        a.fuzzy_threshold,
        AlignConfig::default().fuzzy_threshold,
    )?;
    let mode = iob_mode(e.flag("lenient", a.lenient)?);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Usage(format!(
            "--fuzzy-threshold must lie in [0, 1], got {threshold}"
        )));
    }

    let backend: Box<dyn Backend> = match kind.as_str() {
        "identity" => Box::new(Identity),
        "table" => {
            let p = table.ok_or_else(|| Error::Usage("the table backend needs --table".into()))?;
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            if offline && !p.exists() {
                Box::new(Table {
                    name,
                    entries: Default::default(),
                })
            } else {
                let text = run.read(&p)?;
                Box::new(Table::parse(&name, &text).ok_or_else(|| {
                    Error::Usage(format!("{}: expected SOURCE<TAB>TARGET lines", p.display()))
                })?)
            }
        }
        "http" => {
            Box::new(Http::new(endpoint.ok_or_else(|| {
                Error::Usage("the http backend needs --endpoint".into())
            })?))
        }
        other => {
            return Err(Error::Usage(format!(
                "unknown backend `{other}` (identity, table or http)"
            )));
        }
    };
    let d = read_corpus(&mut run, &input, mode)?;
    let cache = match &cache_p {
        Some(p) => Cache::open(p)?,
        None => Cache::in_memory(),
    };
    let mut client = if offline {
        Client::offline(&backend.id(), cache, &src, &tgt)
    } else {
        Client::new(backend, cache, &src, &tgt)
    };
    let (projected, records, sum) = project_dataset(
        &d,
        &mut client,
        &AlignConfig {
            fuzzy_threshold: threshold,
        },
    );

    let mut log_text = String::new();
    for r in &records {
        log_text.push_str(&r.to_json_line());
        log_text.push('\n');
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "sentences={}", sum.sentences);
    let _ = writeln!(summary, "projected={}", sum.projected);
    let _ = writeln!(summary, "dropped={}", sum.dropped);
    let _ = writeln!(summary, "skipped={}", sum.skipped);
    let _ = writeln!(summary, "spans_ok={}", sum.spans_ok);
    let _ = writeln!(summary, "spans_fuzzy={}", sum.spans_fuzzy);
    let _ = writeln!(summary, "spans_no_match={}", sum.spans_no_match);
    let _ = writeln!(summary, "spans_dropped={}", sum.spans_dropped);
    eprintln!(
        "translation: {} backend calls, {} cache hits",
        client.network_calls, client.cache_hits
    );
    run.output(&out, write_corpus(&projected));
    run.output(&log, log_text);
    emit(&mut run, report.as_deref(), summary);
    run.commit(&e)
}

fn eval(a: EvalArgs) -> Result<(), Error> {
    let (mut run, mut e) = start("eval", &a.common)?;
    let gold_p = need(&mut e, "gold", a.gold)?;
    let pred_p = path_opt(&mut e, "pred", a.pred)?;
    let report = need(&mut e, "report", a.report)?;
    let label = e.or("label", a.label, "model".to_string())?;
    let mode = iob_mode(e.flag("lenient", a.lenient)?);

    let gold = read_corpus(&mut run, &gold_p, mode)?;
    let r = match &pred_p {
        Some(p) => score_pair(&gold, &read_corpus(&mut run, p, mode)?)?,
        None => score(&gold)?,
    };
    let text = reports::eval_text(&r, &label);
    print!("{text}");
    run.output(&report, text);
    run.commit(&e)
}

fn analyze(a: AnalyzeArgs) -> Result<(), Error> {
    let (mut run, mut e) = start("analyze", &a.common)?;
    let input = need(&mut e, "in", a.input)?;
    let report = need(&mut e, "report", a.report)?;
    let kv = path_opt(&mut e, "kv", a.kv)?;
    let svg = path_opt(&mut e, "svg", a.svg)?;
    let mode = iob_mode(e.flag("lenient", a.lenient)?);

    let d = read_corpus(&mut run, &input, mode)?;
    let stats = corpus_stats(&d);
    let pos = match pos_context_stats(&d) {
        Ok(t) => Some(t),
        Err(AnalysisError::MissingPos { id, index }) => {
            eprintln!(
                "note: sentence `{id}` token {index} has no POS tag; POS context table omitted"
            );
            None
        }
    };
    let text = reports::analysis_text(&stats, pos.as_ref());
    print!("{text}");
    run.output(&report, text);
    if let Some(p) = kv {
        run.output(&p, reports::analysis_kv(&stats, pos.as_ref()));
    }
    if let Some(p) = svg {
        run.output(
            &p,
            reports::bar_chart_svg(
                "Share of instances with a stimulus",
                &reports::stimulus_share_bars(&stats),
                1.0,
            ),
        );
    }
    run.commit(&e)
}
