use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ecs_eval::analysis::{
    aggregate_report, agreement, bucket_metrics, render_agreement_tsv, render_tsv, Bucketing, Dimension, ScoreRecord,
};
use ecs_eval::config::RunConfig;
use ecs_eval::corpus::{
    assign_splits, build_instances, corpus_stats, has_time_and_location, read_raw_entries, ConnectiveAnnotator,
    PipelineConfig,
};
use ecs_eval::embedding::HashedNgramEmbedder;
use ecs_eval::evaluate::Scorer;
use ecs_eval::harness::{run_batch, RunOptions};
use ecs_eval::metrics::{HashedCharEncoder, TokenEncoder};
use ecs_eval::model::{load_corpus_path, load_instances, load_predictions, read_jsonl, write_jsonl, Split};
use ecs_eval::nli::{
    build_dataset, reference_sizes, sources_from_instances, write_dataset, BuildPlan, LlmRephraser, Rephraser,
    SourceRecord, SplitSizes, TemplateRephraser,
};
use ecs_eval::recall::{ElementKind, VerdictRecord};
use ecs_eval::Instance;

/// Event-centric summarization benchmark toolkit.
#[derive(Parser)]
#[command(name = "ecs-eval", version)]
struct Cli {
    /// Run configuration (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for generation and entailment calls.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build train/dev/test instances from raw entries and retrieved news.
    BuildCorpus(BuildCorpusArgs),
    /// Build entailment training pairs for one element kind.
    BuildNliData(BuildNliArgs),
    /// Generate summaries for a corpus split.
    Summarize(SummarizeArgs),
    /// Score predictions with all eight metrics.
    Evaluate(EvaluateArgs),
    /// Aggregate scores into a results table.
    Report(ReportArgs),
    /// Break scores down by document count or time span.
    Analyze(AnalyzeArgs),
    /// Print corpus statistics.
    Stats(StatsArgs),
}

#[derive(Args)]
struct BuildCorpusArgs {
    /// Directory of raw entry JSONL files.
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Pipeline settings (TOML).
    #[arg(long)]
    pipeline: Option<PathBuf>,
    /// Keep entries whose card lacks a time or a location.
    #[arg(long)]
    keep_all_entries: bool,
}

#[derive(Args)]
struct BuildNliArgs {
    #[arg(long)]
    kind: ElementKind,
    /// Source records (JSONL).
    #[arg(long, conflicts_with = "corpus")]
    sources: Option<PathBuf>,
    /// Derive source records from an annotated corpus instead.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value = "train")]
    split: Split,
    /// Build plan (TOML).
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// `template` (offline) or `backend` (the configured generation backend).
    #[arg(long, default_value = "template")]
    rephraser: String,
    /// Record the published dataset sizes of this kind in the manifest.
    #[arg(long)]
    declare_reference_sizes: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Corpus directory or split file (defaults to the configured corpus).
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Training split file for demonstrations when --corpus is a file.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    system: String,
    #[arg(long, default_value_t = 0)]
    shots: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cut the longest documents instead of skipping oversized prompts.
    #[arg(long)]
    truncate: bool,
    /// Stop after this many new summaries.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predictions file, or a directory of them.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Discriminator profile; overrides the config.
    #[arg(long)]
    discriminator: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Evaluate output: scores.jsonl or the directory holding it.
    #[arg(long, alias = "predictions")]
    scores: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Evaluate output directory (scores.jsonl, and verdicts.jsonl for --human).
    #[arg(long, alias = "predictions")]
    scores: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
    #[arg(long, default_value = "doc_count")]
    by: Dimension,
    /// Human verdicts to compare the metric verdicts against.
    #[arg(long)]
    human: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Only this split (all splits of a corpus directory by default).
    #[arg(long)]
    split: Option<Split>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// The error chain, skipping causes whose text the previous message
/// already contains.
fn describe(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !out.contains(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if let Command::Evaluate(args) = &cli.command {
        if let Some(d) = &args.discriminator {
            config.discriminator = d.clone();
        }
    }
    config.validate()?;
    match cli.command {
        Command::BuildCorpus(args) => build_corpus(args),
        Command::BuildNliData(args) => build_nli(args, &config),
        Command::Summarize(args) => summarize(args, &config),
        Command::Evaluate(args) => evaluate(args, &config),
        Command::Report(args) => report(args),
        Command::Analyze(args) => analyze(args, &config),
        Command::Stats(args) => stats(args, &config),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn build_corpus(args: BuildCorpusArgs) -> Result<()> {
    let pipeline: PipelineConfig = match &args.pipeline {
        Some(p) => toml::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    let entries = read_raw_entries(&args.raw)?;
    let keep_all = |_: &ecs_eval::corpus::RawEntry| true;
    let predicate: &ecs_eval::corpus::EntryPredicate = if args.keep_all_entries {
        &keep_all
    } else {
        &has_time_and_location
    };
    let (instances, mut report) = build_instances(
        &entries,
        &pipeline,
        &HashedNgramEmbedder::default(),
        &ConnectiveAnnotator,
        predicate,
    )?;
    fs::create_dir_all(&args.out)?;
    for (split, insts) in assign_splits(instances, &pipeline) {
        write_jsonl(&args.out.join(split.file_name()), &insts)?;
        report.split_sizes.insert(split.to_string(), insts.len());
    }
    let json = serde_json::to_string_pretty(&report)?;
    write_file(&args.out.join("build_report.json"), &(json + "\n"))?;
    println!(
        "{} entries, {} admitted, {} rejected, {} not events",
        report.entries,
        report.admitted,
        report.rejected.len(),
        report.non_event
    );
    for (split, n) in &report.split_sizes {
        println!("{split}\t{n}");
    }
    Ok(())
}

fn build_nli(args: BuildNliArgs, config: &RunConfig) -> Result<()> {
    let mut plan: BuildPlan = match &args.plan {
        Some(p) => toml::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => BuildPlan::default(),
    };
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    let sources: Vec<SourceRecord> = match (&args.sources, &args.corpus) {
        (Some(path), _) => read_jsonl(path)?,
        (None, Some(corpus)) => sources_from_instances(&load_corpus_path(corpus, args.split)?, args.kind),
        (None, None) => bail!("one of --sources or --corpus is required"),
    };
    let backend;
    let rephraser: Box<dyn Rephraser + '_> = match args.rephraser.as_str() {
        "template" => Box::new(TemplateRephraser),
        "backend" => {
            backend = config.backend()?;
            Box::new(LlmRephraser {
                backend: backend.as_ref(),
                params: config.generation_params(),
            })
        }
        other => bail!("unknown rephraser {other:?} (expected template or backend)"),
    };
    let dataset = build_dataset(
        args.kind,
        &sources,
        &plan,
        rephraser.as_ref(),
        &HashedNgramEmbedder::default(),
    )?;
    let declared: Option<SplitSizes> = args.declare_reference_sizes.then(|| reference_sizes(args.kind));
    write_dataset(&args.out, &dataset, &plan, declared)?;
    println!("split\tstrategy\tpairs");
    for (split, counts) in &dataset.stats.counts {
        for (strategy, n) in counts {
            println!("{split}\t{strategy}\t{n}");
        }
    }
    for (reason, n) in &dataset.stats.skipped {
        println!("skipped\t{reason}\t{n}");
    }
    Ok(())
}

fn corpus_path(arg: &Option<PathBuf>, config: &RunConfig) -> PathBuf {
    arg.clone().unwrap_or_else(|| config.corpus_dir.clone())
}

fn summarize(args: SummarizeArgs, config: &RunConfig) -> Result<()> {
    let corpus = corpus_path(&args.corpus, config);
    let instances = load_corpus_path(&corpus, args.split)?;
    let train: Vec<Instance> = match (args.shots, &args.train) {
        (0, _) => Vec::new(),
        (_, Some(path)) => load_instances(path)?,
        (_, None) if corpus.is_dir() => load_corpus_path(&corpus, Split::Train)?,
        _ => bail!("--train is required for few-shot runs when --corpus is a file"),
    };
    let backend = config.backend()?;
    let template = config.template()?;
    let options = RunOptions {
        shots: args.shots,
        seed: config.seed,
        jobs: config.jobs,
        truncate: args.truncate,
        limit: args.limit,
        ..RunOptions::new(&args.system)
    };
    let out = args.out.unwrap_or_else(|| config.predictions_dir.clone());
    let outcome = run_batch(
        &instances,
        &train,
        backend.as_ref(),
        &config.generation_params(),
        &template,
        &options,
        &out,
    )?;
    println!(
        "{} summaries in {} ({} resumed, {} skipped)",
        outcome.summaries.len(),
        outcome.predictions_path.display(),
        outcome.manifest.resumed,
        outcome.manifest.skipped.len()
    );
    Ok(())
}

fn prediction_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .jsonl prediction files in {}", path.display());
    }
    Ok(files)
}

fn evaluate(args: EvaluateArgs, config: &RunConfig) -> Result<()> {
    let instances = load_corpus_path(&corpus_path(&args.corpus, config), args.split)?;
    let mut summaries = Vec::new();
    for file in prediction_files(&args.predictions)? {
        summaries.extend(load_predictions(&file)?);
    }
    let discriminator = config.discriminator()?;
    let encoder = HashedCharEncoder::default();
    let mut scorer = Scorer::new(&encoder, discriminator.as_ref());
    scorer.jobs = config.jobs;
    let (scores, verdicts) = scorer.score_all(&instances, &summaries)?;
    let out = args.out.unwrap_or_else(|| config.report_dir.clone());
    fs::create_dir_all(&out)?;
    write_jsonl(&out.join("scores.jsonl"), &scores)?;
    write_jsonl(&out.join("verdicts.jsonl"), &verdicts)?;
    let meta = serde_json::json!({
        "encoder": encoder.name(),
        "discriminator": discriminator.name(),
        "token_mode": scorer.token_mode,
        "predictions": summaries.len(),
    });
    write_file(
        &out.join("evaluation.json"),
        &(serde_json::to_string_pretty(&meta)? + "\n"),
    )?;
    println!(
        "{} predictions scored with {} into {}",
        scores.len(),
        discriminator.name(),
        out.display()
    );
    Ok(())
}

fn load_scores(dir: &Path) -> Result<Vec<ScoreRecord>> {
    let path = if dir.is_dir() {
        dir.join("scores.jsonl")
    } else {
        dir.to_path_buf()
    };
    Ok(read_jsonl(&path)?)
}

fn report(args: ReportArgs) -> Result<()> {
    let rows = aggregate_report(&load_scores(&args.scores)?)?;
    let tsv = render_tsv(&rows);
    let out = match args.out {
        Some(out) => out,
        None if args.scores.is_dir() => args.scores.clone(),
        None => args.scores.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    fs::create_dir_all(&out)?;
    write_file(&out.join("report.tsv"), &tsv)?;
    print!("{tsv}");
    Ok(())
}

fn analyze(args: AnalyzeArgs, config: &RunConfig) -> Result<()> {
    let scores = load_scores(&args.scores)?;
    let instances = load_corpus_path(&corpus_path(&args.corpus, config), args.split)?;
    let buckets = bucket_metrics(&scores, &instances, &Bucketing::default_for(args.by))?;
    let out = args.out.unwrap_or_else(|| config.report_dir.clone());
    fs::create_dir_all(&out)?;
    let name = match args.by {
        Dimension::DocCount => "doc_count",
        Dimension::TimeSpan => "time_span",
    };
    let tsv = buckets.render_tsv();
    write_file(&out.join(format!("buckets.{name}.tsv")), &tsv)?;
    let plot = serde_json::to_string_pretty(&buckets.to_plot_json())?;
    write_file(&out.join(format!("plot.{name}.json")), &(plot + "\n"))?;
    print!("{tsv}");
    if let Some(human) = &args.human {
        let predicted: Vec<VerdictRecord> = read_jsonl(&args.scores.join("verdicts.jsonl"))?;
        let human: Vec<VerdictRecord> = read_jsonl(human)?;
        let table = render_agreement_tsv(&agreement(&predicted, &human)?);
        write_file(&out.join("agreement.tsv"), &table)?;
        print!("{table}");
    }
    Ok(())
}

fn stats(args: StatsArgs, config: &RunConfig) -> Result<()> {
    let corpus = corpus_path(&args.corpus, config);
    let instances: Vec<Instance> = match args.split {
        Some(split) => load_corpus_path(&corpus, split)?,
        None if corpus.is_dir() => {
            let mut all = Vec::new();
            for split in Split::ALL {
                if corpus.join(split.file_name()).exists() {
                    all.extend(load_corpus_path(&corpus, split)?);
                }
            }
            all
        }
        None => load_instances(&corpus)?,
    };
    let s = corpus_stats(&instances);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
    } else {
        println!("instances\t{}", s.instances);
        println!("documents\t{}", s.documents);
        println!("mean_docs\t{:.1}", s.mean_docs);
        println!("mean_input_chars\t{:.0}", s.mean_input_chars);
        println!("mean_reference_chars\t{:.0}", s.mean_reference_chars);
    }
    Ok(())
}
