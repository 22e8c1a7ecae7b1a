use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use toolprint::analysis::{boxplot_svg, dcor_matrix, describe, heatmap_svg, majority_agreement};
use toolprint::classify::{evaluate, split_dataset, KernelKind, MlpHyperparams, ModelFile, OptimizerKind, SvmParams};
use toolprint::corpus::{generate_synthetic_corpus, load_corpus, save_corpus, CorpusFormat, SynthCorpusSpec};
use toolprint::features::{
    build_dataset, default_chunk_count, load_dataset, monte_carlo_dataset, sample_chunks, save_dataset,
    DatasetManifest, DEFAULT_OVERSAMPLE,
};
use toolprint::runner::{
    emit_report, run_experiment, set_global_workers, train_classifier, ClassifierSpec, MlpGrid, ReportFormat,
    RunMode,
};
use toolprint::scorers::{build_score_table, load_table, save_table, TableManifest, ToolSpec};
use toolprint::{ExperimentConfig, Normalization, ReportBundle, ScoreMode};

const EXIT_PARTIAL: u8 = 1;
const EXIT_INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "toolprint", version, about = "Identify sentiment tools from the statistics of their scores")]
struct Cli {
    /// Master seed; overrides the seed of a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true, env = "TOOLPRINT_WORKERS")]
    workers: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a corpus with a list of tools and write scores.csv.
    Score(ScoreArgs),
    /// Apply a normalization to a score table.
    Normalize(NormalizeArgs),
    /// Turn a score table into a labeled moment dataset.
    Features(FeaturesArgs),
    /// Split a dataset 70/15/15, train a classifier and write model.json.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset and write metrics.json.
    Eval(EvalArgs),
    /// Distance correlation matrix of the tools in a score table.
    Dcor(TableArgs),
    /// Per-tool agreement with the majority vote.
    Vote(VoteArgs),
    /// Boxplot statistics per tool.
    Describe(TableArgs),
    /// Run an experiment grid from a config file.
    Run(RunArgs),
    /// Run a config in Monte Carlo mode.
    Mc(RunArgs),
    /// Re-emit reports from a summary.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// JSONL corpus.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    corpus: Option<PathBuf>,
    /// JSON synthetic corpus spec; the generated corpus is saved as corpus.jsonl.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    /// JSON array of tool specs.
    #[arg(long)]
    tools: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Text,
    SentenceMean,
}

impl From<ModeArg> for ScoreMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Text => ScoreMode::Text,
            ModeArg::SentenceMean => ScoreMode::SentenceMean,
        }
    }
}

#[derive(Args)]
struct TableArgs {
    /// Score table CSV written by `score`.
    #[arg(long)]
    scores: PathBuf,
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long)]
    scores: PathBuf,
    /// raw, N1, N3, N5 or N10.
    #[arg(long)]
    norm: Normalization,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value = "raw")]
    norm: Normalization,
    /// Tools to keep, comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    tools: Vec<String>,
    #[arg(long, default_value_t = 200, conflicts_with = "monte_carlo")]
    chunk_size: usize,
    /// Defaults to floor(n_docs / chunk_size) times the oversample factor.
    #[arg(long)]
    n_chunks: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    oversample: usize,
    /// Monte Carlo samples per tool instead of chunks.
    #[arg(long = "monte-carlo")]
    monte_carlo: Option<usize>,
    /// Monte Carlo feature subset size.
    #[arg(long, default_value_t = 15, requires = "monte_carlo")]
    subset_size: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Mlp,
    Knn,
    SvmLinear,
    SvmRbf,
    Tree,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "mlp")]
    classifier: ClassifierArg,
    /// Neighbors for knn.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Depth limit for tree.
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    /// Single MLP point instead of the default 12-point sweep.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long, default_value_t = 0.01, requires = "hidden")]
    lr: f64,
    #[arg(long, default_value_t = 50, requires = "hidden")]
    epochs: usize,
    #[arg(long, value_enum, default_value = "adam", requires = "hidden")]
    optimizer: OptimizerArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Args)]
struct VoteArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value = "N1")]
    norm: Normalization,
    /// Leave documents with a tied vote out of the rates.
    #[arg(long)]
    exclude_ties: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Report formats, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "csv,json,svg,dot")]
    formats: Vec<ReportFormat>,
}

#[derive(Args)]
struct ReportArgs {
    /// summary.json of an earlier run.
    summary: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "csv,json,svg,dot")]
    formats: Vec<ReportFormat>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", render_error(&e));
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn render_error(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn dispatch(cli: &Cli) -> anyhow::Result<ExitCode> {
    if let Some(w) = cli.workers {
        set_global_workers(w)?;
    }
    let seed = cli.seed.unwrap_or(0);
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match &cli.command {
        Command::Score(a) => score(cli, a, seed),
        Command::Normalize(a) => normalize(cli, a),
        Command::Features(a) => features(cli, a, seed),
        Command::Train(a) => train(cli, a, seed),
        Command::Eval(a) => eval(cli, a),
        Command::Dcor(a) => dcor(cli, a),
        Command::Vote(a) => vote(cli, a),
        Command::Describe(a) => describe_cmd(cli, a),
        Command::Run(a) => run(cli, a, None),
        Command::Mc(a) => run(cli, a, Some(RunMode::MonteCarlo)),
        Command::Report(a) => report(cli, a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn written(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn score(cli: &Cli, a: &ScoreArgs, seed: u64) -> anyhow::Result<ExitCode> {
    let corpus = match (&a.corpus, &a.synthetic) {
        (Some(path), _) => load_corpus(path, CorpusFormat::Jsonl)?,
        (None, Some(spec_path)) => {
            let spec: SynthCorpusSpec = read_json(spec_path)?;
            let corpus = generate_synthetic_corpus(&spec, seed)?;
            let p = cli.out.join("corpus.jsonl");
            save_corpus(&corpus, &p)?;
            written(&[p]);
            corpus
        }
        (None, None) => bail!("either --corpus or --synthetic is required"),
    };
    let tools: Vec<ToolSpec> = read_json::<Vec<ToolSpec>>(&a.tools)?
        .into_iter()
        .map(ToolSpec::finalize)
        .collect::<Result<_, _>>()?;
    let mode = ScoreMode::from(a.mode);
    let table = build_score_table(&corpus, &tools, mode, seed)?;
    let manifest = TableManifest {
        mode,
        tools,
        corpus_name: corpus.name.clone(),
        seed,
    };
    let p = cli.out.join("scores.csv");
    save_table(&table, &manifest, &p)?;
    written(&[p]);
    Ok(ExitCode::SUCCESS)
}

fn normalize(cli: &Cli, a: &NormalizeArgs) -> anyhow::Result<ExitCode> {
    let (mut table, manifest) = load_table(&a.scores)?;
    for row in &mut table.scores {
        *row = a.norm.apply_all(row);
    }
    let p = cli.out.join(format!("scores_{}.csv", a.norm));
    save_table(&table, &manifest, &p)?;
    written(&[p]);
    Ok(ExitCode::SUCCESS)
}

fn features(cli: &Cli, a: &FeaturesArgs, seed: u64) -> anyhow::Result<ExitCode> {
    let (table, _) = load_table(&a.scores)?;
    let table = if a.tools.is_empty() { table } else { table.select_tools(&a.tools)? };
    let (ds, manifest) = match a.monte_carlo {
        Some(m) => {
            let mut normalized = table.clone();
            for row in &mut normalized.scores {
                *row = a.norm.apply_all(row);
            }
            let ds = monte_carlo_dataset(&normalized, m, a.subset_size, seed)?;
            let manifest = DatasetManifest {
                feature_names: ds.feature_names.clone(),
                class_names: ds.class_names.clone(),
                norm: a.norm,
                seed,
                chunk_size: None,
                n_chunks: None,
                monte_carlo_m: Some(m),
            };
            (ds, manifest)
        }
        None => {
            let n = table.n_docs();
            let n_chunks = a.n_chunks.unwrap_or_else(|| default_chunk_count(n, a.chunk_size, a.oversample));
            let chunks = sample_chunks(n, a.chunk_size, n_chunks, seed)?;
            let ds = build_dataset(&table, &chunks, a.norm, &table.tools)?;
            let manifest = DatasetManifest {
                feature_names: ds.feature_names.clone(),
                class_names: ds.class_names.clone(),
                norm: a.norm,
                seed,
                chunk_size: Some(a.chunk_size),
                n_chunks: Some(n_chunks),
                monte_carlo_m: None,
            };
            (ds, manifest)
        }
    };
    let p = cli.out.join("dataset.csv");
    save_dataset(&ds, &manifest, &p)?;
    written(&[p]);
    Ok(ExitCode::SUCCESS)
}

fn classifier_spec(a: &TrainArgs) -> ClassifierSpec {
    match a.classifier {
        ClassifierArg::Mlp => {
            let grid = match a.hidden {
                Some(hidden_size) => MlpGrid::single(&MlpHyperparams {
                    hidden_size,
                    learning_rate: a.lr,
                    epochs: a.epochs,
                    optimizer: match a.optimizer {
                        OptimizerArg::Sgd => OptimizerKind::Sgd,
                        OptimizerArg::Adam => OptimizerKind::Adam,
                    },
                    ..Default::default()
                }),
                None => MlpGrid::default(),
            };
            ClassifierSpec::Mlp { grid }
        }
        ClassifierArg::Knn => ClassifierSpec::Knn { k: a.k },
        ClassifierArg::SvmLinear => ClassifierSpec::Svm(SvmParams {
            kernel: KernelKind::Linear,
            ..Default::default()
        }),
        ClassifierArg::SvmRbf => ClassifierSpec::Svm(SvmParams::rbf()),
        ClassifierArg::Tree => ClassifierSpec::Tree { max_depth: a.max_depth },
    }
}

fn train(cli: &Cli, a: &TrainArgs, seed: u64) -> anyhow::Result<ExitCode> {
    let (ds, _) = load_dataset(&a.dataset)?;
    let split = split_dataset(&ds, seed)?;
    let (model, leaderboard) = train_classifier(&classifier_spec(a), &split.train, &split.dev, seed)?;
    let dev = evaluate(&model, &split.dev)?;
    let test = evaluate(&model, &split.test)?;
    let p = cli.out.join("model.json");
    ModelFile::new(model, &ds).save(&p)?;
    let metrics = serde_json::json!({ "dev": dev, "test": test, "leaderboard": leaderboard });
    let mp = cli.out.join("metrics.json");
    std::fs::write(&mp, serde_json::to_string_pretty(&metrics)? + "\n")?;
    written(&[p, mp]);
    eprintln!(
        "dev macro-F1 {:.4}, test macro-F1 {:.4}, test weighted-F1 {:.4}",
        dev.macro_f1, test.macro_f1, test.weighted_f1
    );
    Ok(ExitCode::SUCCESS)
}

fn eval(cli: &Cli, a: &EvalArgs) -> anyhow::Result<ExitCode> {
    let file = ModelFile::load(&a.model)?;
    let (ds, _) = load_dataset(&a.dataset)?;
    if file.feature_names != ds.feature_names {
        bail!("model features {:?} differ from dataset features {:?}", file.feature_names, ds.feature_names);
    }
    let report = evaluate(&file.model, &ds)?;
    let p = cli.out.join("metrics.json");
    std::fs::write(&p, serde_json::to_string_pretty(&report)? + "\n")?;
    written(&[p]);
    eprintln!("macro-F1 {:.4}, weighted-F1 {:.4}", report.macro_f1, report.weighted_f1);
    Ok(ExitCode::SUCCESS)
}

fn dcor(cli: &Cli, a: &TableArgs) -> anyhow::Result<ExitCode> {
    let (table, manifest) = load_table(&a.scores)?;
    let m = dcor_matrix(&table)?;
    let csv = cli.out.join("dcor.csv");
    m.write_csv(BufWriter::new(File::create(&csv)?))?;
    let svg = cli.out.join("dcor.svg");
    std::fs::write(&svg, heatmap_svg(&m, &format!("Distance correlation, {}", manifest.corpus_name)))?;
    written(&[csv, svg]);
    Ok(ExitCode::SUCCESS)
}

fn vote(cli: &Cli, a: &VoteArgs) -> anyhow::Result<ExitCode> {
    let (table, _) = load_table(&a.scores)?;
    let r = majority_agreement(&table, a.norm, a.exclude_ties)?;
    let p = cli.out.join(format!("agreement_{}.csv", a.norm));
    let mut text = String::from("tool,rate,n_documents,n_ties\n");
    for (tool, rate) in r.tools.iter().zip(&r.rates) {
        text.push_str(&format!("{tool},{rate:?},{},{}\n", r.n_documents, r.n_ties));
    }
    std::fs::write(&p, text)?;
    written(&[p]);
    Ok(ExitCode::SUCCESS)
}

fn describe_cmd(cli: &Cli, a: &TableArgs) -> anyhow::Result<ExitCode> {
    let (table, manifest) = load_table(&a.scores)?;
    let stats = describe(&table);
    let json = cli.out.join("describe.json");
    std::fs::write(&json, serde_json::to_string_pretty(&stats)? + "\n")?;
    let svg = cli.out.join("boxplot.svg");
    std::fs::write(&svg, boxplot_svg(&stats, &format!("Scores, {}", manifest.corpus_name)))?;
    written(&[json, svg]);
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli, a: &RunArgs, force_mode: Option<RunMode>) -> anyhow::Result<ExitCode> {
    let mut config = ExperimentConfig::load(&a.config)?;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    if let Some(m) = force_mode {
        config.mode = m;
    }
    let bundle = run_experiment(&config)?;
    let formats: BTreeSet<ReportFormat> = a.formats.iter().copied().collect();
    written(&emit_report(&bundle, &cli.out, &formats)?);
    let failed = bundle.n_failed();
    eprintln!(
        "{} cells, {} failed, {:.1}s",
        bundle.cells.len(),
        failed,
        bundle.timing.total_seconds
    );
    for c in bundle.cells.iter().filter(|c| c.error.is_some()) {
        eprintln!("  {}: {}", c.id, c.error.as_deref().unwrap_or_default());
    }
    Ok(if failed > 0 { ExitCode::from(EXIT_PARTIAL) } else { ExitCode::SUCCESS })
}

fn report(cli: &Cli, a: &ReportArgs) -> anyhow::Result<ExitCode> {
    let bundle: ReportBundle = read_json(&a.summary)?;
    let formats: BTreeSet<ReportFormat> = a.formats.iter().copied().collect();
    written(&emit_report(&bundle, &cli.out, &formats)?);
    Ok(ExitCode::SUCCESS)
}
