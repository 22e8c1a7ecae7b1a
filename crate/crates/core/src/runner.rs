//! Experiment grids: configuration, per-cell execution on a worker pool,
//! and report emission.
//!
//! A grid cell is one combination of corpus group, tool group,
//! normalization, chunk size (or Monte Carlo `m` and feature subset size)
//! and classifier. Cells are independent; each derives its seeds from the
//! master seed and its own coordinates.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    boxplot_svg, dcor_matrix, describe, heatmap_svg, majority_agreement, AgreementReport, BoxplotStats,
    DcorMatrix,
};
use crate::classify::{
    evaluate, export_tree_dot, split_dataset, train_knn, train_mlp, train_svm, train_tree, KernelKind,
    MetricsReport, Mlp, MlpHyperparams, Model, OptimizerKind, SvmParams,
};
use crate::corpus::{generate_synthetic_corpus, load_corpus, Corpus, CorpusFormat, SynthCorpusSpec, CORPUS_GROUPS};
use crate::error::{Error, Result};
use crate::features::{
    build_dataset, default_chunk_count, fit_scaler, monte_carlo_dataset, sample_chunks, LabeledDataset,
    DEFAULT_OVERSAMPLE,
};
use crate::normalize::Normalization;
use crate::rng::{derive_seed, hash_str};
use crate::scorers::{build_score_table, format_f64, ScoreMode, ScoreTable, ToolSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolGroup {
    All,
    Discrete,
    Continuous,
    DiscreteSentences,
    ContinuousSentences,
}

impl ToolGroup {
    pub const ALL: [ToolGroup; 5] = [
        ToolGroup::All,
        ToolGroup::Discrete,
        ToolGroup::Continuous,
        ToolGroup::DiscreteSentences,
        ToolGroup::ContinuousSentences,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolGroup::All => "all",
            ToolGroup::Discrete => "discrete",
            ToolGroup::Continuous => "continuous",
            ToolGroup::DiscreteSentences => "discrete_sentences",
            ToolGroup::ContinuousSentences => "continuous_sentences",
        }
    }

    /// Scoring modes whose outputs become classes of this group.
    pub fn modes(self) -> &'static [ScoreMode] {
        match self {
            ToolGroup::All | ToolGroup::Discrete | ToolGroup::Continuous => {
                &[ScoreMode::Text, ScoreMode::SentenceMean]
            }
            ToolGroup::DiscreteSentences | ToolGroup::ContinuousSentences => &[ScoreMode::SentenceMean],
        }
    }

    pub fn includes(self, tool: &ToolSpec) -> bool {
        match self {
            ToolGroup::All => true,
            ToolGroup::Discrete | ToolGroup::DiscreteSentences => tool.is_discrete(),
            ToolGroup::Continuous | ToolGroup::ContinuousSentences => !tool.is_discrete(),
        }
    }

    /// Class labels of the group, mode-major then in tool order.
    pub fn labels(self, tools: &[ToolSpec]) -> Vec<(String, ScoreMode)> {
        self.modes()
            .iter()
            .flat_map(|&mode| {
                tools
                    .iter()
                    .filter(move |t| self.includes(t))
                    .map(move |t| (t.name.clone(), mode))
            })
            .collect()
    }
}

impl fmt::Display for ToolGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToolGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ToolGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown tool group `{s}`")))
    }
}

/// Class label of a tool scored in a given mode.
pub fn mode_label(tool: &str, mode: ScoreMode) -> String {
    format!("{tool}@{}", mode.as_str())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Grid,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CorpusSource {
    Synthetic {
        #[serde(default)]
        spec: SynthCorpusSpec,
    },
    Jsonl {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub name: String,
    #[serde(flatten)]
    pub source: CorpusSource,
    /// Empty means: the synthetic spec's tags, or the tags derived from the
    /// documents' genre.
    #[serde(default)]
    pub groups: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpGrid {
    pub hidden_sizes: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub optimizers: Vec<OptimizerKind>,
    pub epochs: Vec<usize>,
    pub batch_size: usize,
}

impl Default for MlpGrid {
    fn default() -> Self {
        MlpGrid {
            hidden_sizes: vec![10, 50, 150],
            learning_rates: vec![0.001, 0.01],
            optimizers: vec![OptimizerKind::Sgd, OptimizerKind::Adam],
            epochs: vec![50],
            batch_size: 32,
        }
    }
}

impl MlpGrid {
    pub fn single(hp: &MlpHyperparams) -> Self {
        MlpGrid {
            hidden_sizes: vec![hp.hidden_size],
            learning_rates: vec![hp.learning_rate],
            optimizers: vec![hp.optimizer],
            epochs: vec![hp.epochs],
            batch_size: hp.batch_size,
        }
    }

    pub fn points(&self, seed: u64) -> Vec<MlpHyperparams> {
        let mut out = Vec::new();
        for &hidden_size in &self.hidden_sizes {
            for &learning_rate in &self.learning_rates {
                for &optimizer in &self.optimizers {
                    for &epochs in &self.epochs {
                        out.push(MlpHyperparams {
                            hidden_size,
                            optimizer,
                            learning_rate,
                            epochs,
                            batch_size: self.batch_size,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Mlp {
        #[serde(default)]
        grid: MlpGrid,
    },
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    Svm(SvmParams),
    Tree {
        #[serde(default = "default_depth")]
        max_depth: usize,
    },
}

fn default_k() -> usize {
    5
}

fn default_depth() -> usize {
    5
}

impl ClassifierSpec {
    pub fn label(&self) -> String {
        match self {
            ClassifierSpec::Mlp { .. } => "mlp".into(),
            ClassifierSpec::Knn { k } => format!("knn{k}"),
            ClassifierSpec::Svm(p) => match p.kernel {
                KernelKind::Linear => "svm_linear".into(),
                KernelKind::Rbf => "svm_rbf".into(),
            },
            ClassifierSpec::Tree { max_depth } => format!("tree{max_depth}"),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match self {
            ClassifierSpec::Mlp { grid } => {
                let points = grid.points(0);
                if points.is_empty() {
                    return bad("mlp grid is empty".into());
                }
                for p in &points {
                    p.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
                }
            }
            ClassifierSpec::Knn { k } if *k == 0 => return bad("knn k must be positive".into()),
            ClassifierSpec::Svm(p) if !(p.c > 0.0 && p.tol > 0.0) => {
                return bad("svm c and tol must be positive".into())
            }
            _ => {}
        }
        Ok(())
    }
}

/// Trains one classifier. MLPs sweep their grid on `dev`; the other
/// learners ignore it.
pub fn train_classifier(
    spec: &ClassifierSpec,
    train: &LabeledDataset,
    dev: &LabeledDataset,
    seed: u64,
) -> Result<(Model, Option<Vec<LeaderboardEntry>>)> {
    Ok(match spec {
        ClassifierSpec::Mlp { grid } => {
            let (mlp, board) = sweep_mlp(train, dev, &grid.points(seed))?;
            (Model::Mlp(mlp), Some(board))
        }
        ClassifierSpec::Knn { k } => (Model::Knn(train_knn(train, *k)?), None),
        ClassifierSpec::Svm(p) => (Model::Svm(train_svm(train, p)?), None),
        ClassifierSpec::Tree { max_depth } => (Model::Tree(train_tree(train, *max_depth)?), None),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub hyperparams: MlpHyperparams,
    pub dev_macro_f1: Option<f64>,
    pub dev_weighted_f1: Option<f64>,
    pub error: Option<String>,
}

/// Trains every grid point and keeps the best by dev macro-F1; ties go to
/// the smaller hidden layer, then the lower learning rate, then grid order.
pub fn sweep_mlp(
    train: &LabeledDataset,
    dev: &LabeledDataset,
    grid: &[MlpHyperparams],
) -> Result<(Mlp, Vec<LeaderboardEntry>)> {
    if grid.is_empty() {
        return Err(Error::InvalidHyperparams("empty mlp grid".into()));
    }
    let results: Vec<Result<(Mlp, MetricsReport)>> = grid
        .par_iter()
        .map(|hp| {
            let mlp = train_mlp(train, dev, hp)?;
            let model = Model::Mlp(mlp);
            let report = evaluate(&model, dev)?;
            let Model::Mlp(mlp) = model else { unreachable!() };
            Ok((mlp, report))
        })
        .collect();

    let mut board = Vec::with_capacity(grid.len());
    let mut best: Option<usize> = None;
    for (i, (hp, r)) in grid.iter().zip(&results).enumerate() {
        match r {
            Ok((_, rep)) => {
                board.push(LeaderboardEntry {
                    hyperparams: hp.clone(),
                    dev_macro_f1: Some(rep.macro_f1),
                    dev_weighted_f1: Some(rep.weighted_f1),
                    error: None,
                });
                let better = match best {
                    None => true,
                    Some(b) => {
                        let (bf, bh) = (results[b].as_ref().unwrap().1.macro_f1, &grid[b]);
                        rep.macro_f1 > bf
                            || (rep.macro_f1 == bf
                                && (hp.hidden_size, hp.learning_rate) < (bh.hidden_size, bh.learning_rate))
                    }
                };
                if better {
                    best = Some(i);
                }
            }
            Err(e) => board.push(LeaderboardEntry {
                hyperparams: hp.clone(),
                dev_macro_f1: None,
                dev_weighted_f1: None,
                error: Some(e.to_string()),
            }),
        }
    }
    match best {
        Some(b) => {
            let mlp = results.into_iter().nth(b).unwrap()?.0;
            Ok((mlp, board))
        }
        None => Err(results.into_iter().find_map(|r| r.err()).unwrap()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarloConfig {
    pub m: Vec<usize>,
    pub feature_subset_sizes: Vec<usize>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            m: vec![100],
            feature_subset_sizes: vec![15],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: RunMode,
    pub corpora: Vec<CorpusConfig>,
    /// Empty means every group that has at least one member corpus.
    #[serde(default)]
    pub corpus_groups: Vec<String>,
    pub tools: Vec<ToolSpec>,
    #[serde(default = "default_tool_groups")]
    pub tool_groups: Vec<ToolGroup>,
    #[serde(default = "default_normalizations")]
    pub normalizations: Vec<Normalization>,
    #[serde(default = "default_chunk_sizes")]
    pub chunk_sizes: Vec<usize>,
    #[serde(default = "default_oversample")]
    pub oversample_factor: usize,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierSpec>,
    #[serde(default)]
    pub use_scaler: bool,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    /// Skip documents with a tied majority vote in agreement reports.
    #[serde(default)]
    pub exclude_ties: bool,
    /// Compute dcor, agreement and boxplot statistics per corpus group.
    #[serde(default = "default_true")]
    pub analysis: bool,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_tool_groups() -> Vec<ToolGroup> {
    vec![ToolGroup::All]
}

fn default_normalizations() -> Vec<Normalization> {
    vec![Normalization::Raw]
}

fn default_chunk_sizes() -> Vec<usize> {
    vec![200]
}

fn default_oversample() -> usize {
    DEFAULT_OVERSAMPLE
}

fn default_classifiers() -> Vec<ClassifierSpec> {
    vec![ClassifierSpec::Mlp {
        grid: MlpGrid::default(),
    }]
}

fn default_true() -> bool {
    true
}

fn has_duplicates<T: PartialEq>(v: &[T]) -> bool {
    v.iter().enumerate().any(|(i, x)| v[..i].contains(x))
}

impl ExperimentConfig {
    /// Parses a config; relative JSONL paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if let Some(base) = base_dir {
            for c in &mut cfg.corpora {
                if let CorpusSource::Jsonl { path } = &mut c.source {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
            }
        }
        cfg.validated()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent())
    }

    /// Fills in tool group tags and checks every selection.
    pub fn validated(mut self) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.name.is_empty() {
            return bad("name must not be empty".into());
        }
        if self.corpora.is_empty() {
            return bad("no corpora".into());
        }
        let names: Vec<&String> = self.corpora.iter().map(|c| &c.name).collect();
        if has_duplicates(&names) {
            return bad("corpus names must be unique".into());
        }
        for c in &self.corpora {
            if c.name.is_empty() || c.name.contains(['/', '\\']) {
                return bad(format!("invalid corpus name `{}`", c.name));
            }
            if let Some(g) = c.groups.iter().find(|g| !CORPUS_GROUPS.contains(&g.as_str())) {
                return bad(format!("corpus `{}` has unknown group `{g}`", c.name));
            }
        }
        if let Some(g) = self.corpus_groups.iter().find(|g| !CORPUS_GROUPS.contains(&g.as_str())) {
            return bad(format!("unknown corpus group `{g}`"));
        }
        if has_duplicates(&self.corpus_groups) {
            return bad("corpus groups listed twice".into());
        }

        self.tools = std::mem::take(&mut self.tools)
            .into_iter()
            .map(|t| t.finalize().map_err(|e| Error::InvalidConfig(e.to_string())))
            .collect::<Result<_>>()?;
        if self.tools.len() < 2 {
            return bad(format!("need at least 2 tools, got {}", self.tools.len()));
        }
        let tool_names: Vec<&String> = self.tools.iter().map(|t| &t.name).collect();
        if has_duplicates(&tool_names) {
            return bad("tool names must be unique".into());
        }
        if self.tool_groups.is_empty() || has_duplicates(&self.tool_groups) {
            return bad("tool groups must be non-empty and distinct".into());
        }
        for g in &self.tool_groups {
            let n = g.labels(&self.tools).len();
            if n < 2 {
                return bad(format!("tool group `{g}` has {n} classes, need at least 2"));
            }
        }
        if self.normalizations.is_empty() || has_duplicates(&self.normalizations) {
            return bad("normalizations must be non-empty and distinct".into());
        }
        match self.mode {
            RunMode::Grid => {
                if self.chunk_sizes.is_empty() || has_duplicates(&self.chunk_sizes) {
                    return bad("chunk sizes must be non-empty and distinct".into());
                }
                if self.chunk_sizes.contains(&0) {
                    return bad("chunk sizes must be positive".into());
                }
                if self.oversample_factor == 0 {
                    return bad("oversample factor must be positive".into());
                }
            }
            RunMode::MonteCarlo => {
                let mc = &self.monte_carlo;
                if mc.m.is_empty() || mc.m.contains(&0) || has_duplicates(&mc.m) {
                    return bad("monte carlo m must be non-empty, positive and distinct".into());
                }
                if mc.feature_subset_sizes.is_empty() || has_duplicates(&mc.feature_subset_sizes) {
                    return bad("feature subset sizes must be non-empty and distinct".into());
                }
                if let Some(l) = mc.feature_subset_sizes.iter().find(|l| !(1..=15).contains(*l)) {
                    return bad(format!("feature subset size {l} outside [1, 15]"));
                }
            }
        }
        if self.classifiers.is_empty() {
            return bad("no classifiers".into());
        }
        let labels: Vec<String> = self.classifiers.iter().map(|c| c.label()).collect();
        if has_duplicates(&labels) {
            return bad(format!("classifier labels must be distinct, got {labels:?}"));
        }
        for c in &self.classifiers {
            c.validate()?;
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        Ok(self)
    }

    /// Every cell of the grid, in report order.
    pub fn cells(&self, corpus_groups: &[String]) -> Vec<CellKey> {
        let mut data_axes: Vec<(Option<usize>, Option<usize>, Option<usize>)> = Vec::new();
        match self.mode {
            RunMode::Grid => data_axes.extend(self.chunk_sizes.iter().map(|&c| (Some(c), None, None))),
            RunMode::MonteCarlo => {
                for &m in &self.monte_carlo.m {
                    for &l in &self.monte_carlo.feature_subset_sizes {
                        data_axes.push((None, Some(m), Some(l)));
                    }
                }
            }
        }
        let mut out = Vec::new();
        for cg in corpus_groups {
            for &tg in &self.tool_groups {
                for &norm in &self.normalizations {
                    for &(chunk_size, mc_m, feature_subset_size) in &data_axes {
                        for c in &self.classifiers {
                            out.push(CellKey {
                                corpus_group: cg.clone(),
                                tool_group: tg,
                                normalization: norm,
                                chunk_size,
                                mc_m,
                                feature_subset_size,
                                classifier: c.label(),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub corpus_group: String,
    pub tool_group: ToolGroup,
    pub normalization: Normalization,
    pub chunk_size: Option<usize>,
    pub mc_m: Option<usize>,
    pub feature_subset_size: Option<usize>,
    pub classifier: String,
}

impl CellKey {
    /// Coordinates without the classifier.
    pub fn data_id(&self) -> String {
        let mut s = format!("{}_{}_{}", self.corpus_group, self.tool_group, self.normalization);
        if let Some(c) = self.chunk_size {
            s.push_str(&format!("_c{c}"));
        }
        if let (Some(m), Some(l)) = (self.mc_m, self.feature_subset_size) {
            s.push_str(&format!("_m{m}_l{l}"));
        }
        s
    }

    pub fn id(&self) -> String {
        format!("{}_{}", self.data_id(), self.classifier)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// One row of the results table. Wall times live in [`Timing`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: String,
    pub corpus_group: String,
    pub tool_group: ToolGroup,
    pub normalization: Normalization,
    pub chunk_size: Option<usize>,
    pub mc_m: Option<usize>,
    pub feature_subset_size: Option<usize>,
    pub classifier: String,
    pub seed: u64,
    pub status: CellStatus,
    pub error: Option<String>,
    pub n_classes: Option<usize>,
    pub n_train: Option<usize>,
    pub n_dev: Option<usize>,
    pub n_test: Option<usize>,
    pub dev_macro_f1: Option<f64>,
    pub dev_weighted_f1: Option<f64>,
    pub test_macro_f1: Option<f64>,
    pub test_weighted_f1: Option<f64>,
    /// Winning MLP grid point, as `h<hidden>_<optimizer>_lr<rate>_e<epochs>`.
    pub selected: Option<String>,
}

impl CellRecord {
    fn pending(key: &CellKey, seed: u64) -> Self {
        CellRecord {
            id: key.id(),
            corpus_group: key.corpus_group.clone(),
            tool_group: key.tool_group,
            normalization: key.normalization,
            chunk_size: key.chunk_size,
            mc_m: key.mc_m,
            feature_subset_size: key.feature_subset_size,
            classifier: key.classifier.clone(),
            seed,
            status: CellStatus::Failed,
            error: None,
            n_classes: None,
            n_train: None,
            n_dev: None,
            n_test: None,
            dev_macro_f1: None,
            dev_weighted_f1: None,
            test_macro_f1: None,
            test_weighted_f1: None,
            selected: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub corpus_group: String,
    pub tool_group: ToolGroup,
    pub normalization: Normalization,
    pub classifier: String,
    pub n_cells: usize,
    pub mean_test_macro_f1: f64,
    pub std_test_macro_f1: f64,
    pub mean_test_weighted_f1: f64,
    pub mean_dev_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAnalysis {
    pub corpus_group: String,
    pub n_documents: usize,
    pub dcor: DcorMatrix,
    /// Empty when fewer than three tool labels are present.
    pub agreement: Vec<AgreementReport>,
    pub describe: Vec<BoxplotStats>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub workers: usize,
    pub total_seconds: f64,
    pub cell_seconds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub name: String,
    pub seed: u64,
    pub mode: RunMode,
    pub cells: Vec<CellRecord>,
    pub aggregates: Vec<Aggregate>,
    pub analyses: Vec<GroupAnalysis>,
    /// DOT text of every tree classifier, by cell id.
    pub trees: BTreeMap<String, String>,
    /// MLP sweep results, by cell id.
    pub leaderboards: BTreeMap<String, Vec<LeaderboardEntry>>,
    /// Everything that varies between identical runs.
    #[serde(default)]
    pub timing: Timing,
}

impl ReportBundle {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellStatus::Failed).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// JSON of the bundle with the timing field reset, for comparing runs.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut b = self.clone();
        b.timing = Timing::default();
        b.to_json()
    }
}

fn corpus_seed(master: u64, corpus: &str) -> u64 {
    derive_seed(master, &[hash_str("corpus"), hash_str(corpus)])
}

fn load_corpus_config(c: &CorpusConfig, master: u64) -> Result<Corpus> {
    let mut corpus = match &c.source {
        CorpusSource::Synthetic { spec } => {
            let mut spec = spec.clone();
            spec.name = c.name.clone();
            generate_synthetic_corpus(&spec, corpus_seed(master, &c.name))?
        }
        CorpusSource::Jsonl { path } => load_corpus(path, CorpusFormat::Jsonl)?,
    };
    corpus.name = c.name.clone();
    if !c.groups.is_empty() {
        corpus.group_tags = c.groups.clone();
    }
    if corpus.group_tags.contains("C1") || corpus.group_tags.contains("C2") {
        corpus.group_tags.insert("C3".into());
    }
    Ok(corpus)
}

struct Prepared {
    corpus_groups: Vec<String>,
    /// Pooled score tables by corpus group, one per mode, all tools.
    pooled: HashMap<(String, ScoreMode), ScoreTable>,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let corpora: Vec<Corpus> = config
        .corpora
        .iter()
        .map(|c| load_corpus_config(c, config.seed))
        .collect::<Result<_>>()?;
    let corpus_groups: Vec<String> = if config.corpus_groups.is_empty() {
        CORPUS_GROUPS
            .iter()
            .filter(|g| corpora.iter().any(|c| c.group_tags.contains(**g)))
            .map(|g| g.to_string())
            .collect()
    } else {
        config.corpus_groups.clone()
    };
    if corpus_groups.is_empty() {
        return Err(Error::InvalidConfig("no corpus belongs to any group".into()));
    }
    let mut modes: Vec<ScoreMode> = Vec::new();
    for g in &config.tool_groups {
        for m in g.modes() {
            if !modes.contains(m) {
                modes.push(*m);
            }
        }
    }

    let mut per_corpus: HashMap<(usize, ScoreMode), ScoreTable> = HashMap::new();
    for (i, corpus) in corpora.iter().enumerate() {
        if !corpus_groups.iter().any(|g| corpus.group_tags.contains(g)) {
            continue;
        }
        for &mode in &modes {
            let mut t = build_score_table(
                corpus,
                &config.tools,
                mode,
                derive_seed(config.seed, &[hash_str("scores"), hash_str(&corpus.name)]),
            )?;
            t.doc_ids = t.doc_ids.iter().map(|d| format!("{}/{d}", corpus.name)).collect();
            per_corpus.insert((i, mode), t);
        }
    }

    let mut pooled = HashMap::new();
    for g in &corpus_groups {
        let members: Vec<usize> = (0..corpora.len()).filter(|&i| corpora[i].group_tags.contains(g)).collect();
        if members.is_empty() {
            return Err(Error::InvalidConfig(format!("corpus group `{g}` has no member corpus")));
        }
        for &mode in &modes {
            let mut table = per_corpus[&(members[0], mode)].clone();
            for &i in &members[1..] {
                table.append_docs(&per_corpus[&(i, mode)])?;
            }
            pooled.insert((g.clone(), mode), table);
        }
    }
    Ok(Prepared { corpus_groups, pooled })
}

/// Table whose rows are the given `(tool, mode)` labels.
fn labeled_table(prep: &Prepared, corpus_group: &str, labels: &[(String, ScoreMode)]) -> Result<ScoreTable> {
    let mut tools = Vec::with_capacity(labels.len());
    let mut scores = Vec::with_capacity(labels.len());
    let mut doc_ids = Vec::new();
    let mut mode = ScoreMode::Text;
    for (i, (tool, m)) in labels.iter().enumerate() {
        let t = &prep.pooled[&(corpus_group.to_string(), *m)];
        if i == 0 {
            doc_ids = t.doc_ids.clone();
            mode = *m;
        }
        let row = t.row(tool).ok_or_else(|| Error::UnknownTool(tool.clone()))?;
        tools.push(mode_label(tool, *m));
        scores.push(row.to_vec());
    }
    ScoreTable::new(tools, doc_ids, mode, scores)
}

struct CellOutput {
    record: CellRecord,
    tree: Option<String>,
    leaderboard: Option<Vec<LeaderboardEntry>>,
    seconds: f64,
}

fn run_cell(
    config: &ExperimentConfig,
    table: &ScoreTable,
    key: &CellKey,
    classifier: &ClassifierSpec,
) -> Result<(CellRecord, Option<String>, Option<Vec<LeaderboardEntry>>)> {
    let master = config.seed;
    let cell_seed = derive_seed(master, &[hash_str("cell"), hash_str(&key.id())]);
    let data_seed = derive_seed(master, &[hash_str("data"), hash_str(&key.data_id())]);
    let ds = match config.mode {
        RunMode::Grid => {
            let cs = key.chunk_size.expect("grid cell without chunk size");
            let n = table.n_docs();
            if cs > n {
                return Err(Error::ChunkTooLarge {
                    chunk_size: cs,
                    n_docs: n,
                });
            }
            let chunk_seed = derive_seed(master, &[hash_str("chunks"), hash_str(&key.corpus_group), cs as u64]);
            let chunks = sample_chunks(n, cs, default_chunk_count(n, cs, config.oversample_factor), chunk_seed)?;
            build_dataset(table, &chunks, key.normalization, &table.tools)?
        }
        RunMode::MonteCarlo => {
            let mut normalized = table.clone();
            for row in &mut normalized.scores {
                *row = key.normalization.apply_all(row);
            }
            let mc_seed = derive_seed(master, &[hash_str("monte_carlo"), hash_str(&key.corpus_group)]);
            monte_carlo_dataset(
                &normalized,
                key.mc_m.expect("monte carlo cell without m"),
                key.feature_subset_size.expect("monte carlo cell without subset size"),
                mc_seed,
            )?
        }
    };
    let split = split_dataset(&ds, data_seed)?;
    let (train, dev, test) = if config.use_scaler {
        let scaler = fit_scaler(&split.train)?;
        (scaler.transform(&split.train), scaler.transform(&split.dev), scaler.transform(&split.test))
    } else {
        (split.train, split.dev, split.test)
    };
    let (model, leaderboard) = train_classifier(classifier, &train, &dev, cell_seed)?;
    let dev_m = evaluate(&model, &dev)?;
    let test_m = evaluate(&model, &test)?;
    let tree = match &model {
        Model::Tree(t) => Some(export_tree_dot(t, &ds.feature_names, &ds.class_names)),
        _ => None,
    };
    let selected = match &model {
        Model::Mlp(m) => m.hyperparams.as_ref().map(|hp| {
            let opt = match hp.optimizer {
                OptimizerKind::Sgd => "sgd",
                OptimizerKind::Adam => "adam",
            };
            format!("h{}_{opt}_lr{}_e{}", hp.hidden_size, format_f64(hp.learning_rate), hp.epochs)
        }),
        _ => None,
    };
    let mut record = CellRecord::pending(key, cell_seed);
    record.status = CellStatus::Ok;
    record.n_classes = Some(ds.n_classes());
    record.n_train = Some(train.len());
    record.n_dev = Some(dev.len());
    record.n_test = Some(test.len());
    record.dev_macro_f1 = Some(dev_m.macro_f1);
    record.dev_weighted_f1 = Some(dev_m.weighted_f1);
    record.test_macro_f1 = Some(test_m.macro_f1);
    record.test_weighted_f1 = Some(test_m.weighted_f1);
    record.selected = selected;
    Ok((record, tree, leaderboard))
}

fn aggregate(cells: &[CellRecord]) -> Vec<Aggregate> {
    let mut order: Vec<(String, ToolGroup, Normalization, String)> = Vec::new();
    let mut groups: HashMap<(String, ToolGroup, Normalization, String), Vec<&CellRecord>> = HashMap::new();
    for c in cells.iter().filter(|c| c.status == CellStatus::Ok) {
        let key = (c.corpus_group.clone(), c.tool_group, c.normalization, c.classifier.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(c);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let n = members.len() as f64;
            let mean = |f: fn(&CellRecord) -> Option<f64>| members.iter().filter_map(|c| f(c)).sum::<f64>() / n;
            let m = mean(|c| c.test_macro_f1);
            let var = members
                .iter()
                .filter_map(|c| c.test_macro_f1)
                .map(|v| (v - m) * (v - m))
                .sum::<f64>()
                / n;
            Aggregate {
                corpus_group: key.0,
                tool_group: key.1,
                normalization: key.2,
                classifier: key.3,
                n_cells: members.len(),
                mean_test_macro_f1: m,
                std_test_macro_f1: var.sqrt(),
                mean_test_weighted_f1: mean(|c| c.test_weighted_f1),
                mean_dev_macro_f1: mean(|c| c.dev_macro_f1),
            }
        })
        .collect()
}

fn analyse(config: &ExperimentConfig, prep: &Prepared) -> Result<Vec<GroupAnalysis>> {
    let mut labels: Vec<(String, ScoreMode)> = Vec::new();
    for mode in [ScoreMode::Text, ScoreMode::SentenceMean] {
        for t in &config.tools {
            if config.tool_groups.iter().any(|g| g.modes().contains(&mode) && g.includes(t)) {
                labels.push((t.name.clone(), mode));
            }
        }
    }
    prep.corpus_groups
        .iter()
        .map(|g| {
            let table = labeled_table(prep, g, &labels)?;
            let agreement = if table.n_tools() >= 3 {
                config
                    .normalizations
                    .iter()
                    .map(|&n| majority_agreement(&table, n, config.exclude_ties))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            Ok(GroupAnalysis {
                corpus_group: g.clone(),
                n_documents: table.n_docs(),
                dcor: dcor_matrix(&table)?,
                agreement,
                describe: describe(&table),
            })
        })
        .collect()
}

/// Runs every cell of the grid. Only setup problems (invalid config,
/// unreadable corpora) are errors; a failing cell is recorded in the
/// bundle and the run continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    let config = config.clone().validated()?;
    let started = Instant::now();
    let workers = config.workers.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;

    pool.install(|| {
        let prep = prepare(&config)?;
        let cells = config.cells(&prep.corpus_groups);
        let mut tables: HashMap<(String, ToolGroup), ScoreTable> = HashMap::new();
        for g in &prep.corpus_groups {
            for &tg in &config.tool_groups {
                tables.insert((g.clone(), tg), labeled_table(&prep, g, &tg.labels(&config.tools))?);
            }
        }
        let classifiers: HashMap<String, &ClassifierSpec> =
            config.classifiers.iter().map(|c| (c.label(), c)).collect();

        let outputs: Vec<CellOutput> = cells
            .par_iter()
            .map(|key| {
                let t0 = Instant::now();
                let table = &tables[&(key.corpus_group.clone(), key.tool_group)];
                let result = run_cell(&config, table, key, classifiers[&key.classifier]);
                let (record, tree, leaderboard) = match result {
                    Ok(r) => r,
                    Err(e) => {
                        let seed = derive_seed(config.seed, &[hash_str("cell"), hash_str(&key.id())]);
                        let mut rec = CellRecord::pending(key, seed);
                        rec.error = Some(e.to_string());
                        (rec, None, None)
                    }
                };
                CellOutput {
                    record,
                    tree,
                    leaderboard,
                    seconds: t0.elapsed().as_secs_f64(),
                }
            })
            .collect();

        let analyses = if config.analysis { analyse(&config, &prep)? } else { Vec::new() };

        let mut bundle = ReportBundle {
            name: config.name.clone(),
            seed: config.seed,
            mode: config.mode,
            cells: Vec::with_capacity(outputs.len()),
            aggregates: Vec::new(),
            analyses,
            trees: BTreeMap::new(),
            leaderboards: BTreeMap::new(),
            timing: Timing {
                workers,
                ..Default::default()
            },
        };
        for out in outputs {
            let id = out.record.id.clone();
            if let Some(t) = out.tree {
                bundle.trees.insert(id.clone(), t);
            }
            if let Some(l) = out.leaderboard {
                bundle.leaderboards.insert(id.clone(), l);
            }
            bundle.timing.cell_seconds.insert(id, out.seconds);
            bundle.cells.push(out.record);
        }
        bundle.aggregates = aggregate(&bundle.cells);
        bundle.timing.total_seconds = started.elapsed().as_secs_f64();
        Ok(bundle)
    })
}

/// Sizes the global worker pool used by the standalone operations. Only
/// the first call has an effect.
pub fn set_global_workers(workers: usize) -> Result<()> {
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be positive".into()));
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
    Dot,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 4] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg, ReportFormat::Dot];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Svg => "svg",
            ReportFormat::Dot => "dot",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReportFormat::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown report format `{s}`")))
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_cells_csv<W: Write>(w: W, cells: &[CellRecord]) -> Result<()> {
    let mut w = csv_writer(w);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_cells_csv<R: Read>(r: R) -> Result<Vec<CellRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Writes the bundle in the requested formats and returns the files
/// written, in a stable order.
pub fn emit_report(bundle: &ReportBundle, out_dir: impl AsRef<Path>, formats: &BTreeSet<ReportFormat>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    if formats.contains(&ReportFormat::Csv) {
        let p = dir.join("cells.csv");
        write_cells_csv(create(&p)?, &bundle.cells)?;
        written.push(p);

        let p = dir.join("aggregates.csv");
        let mut w = csv_writer(create(&p)?);
        for a in &bundle.aggregates {
            w.serialize(a)?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
        written.push(p);

        for a in &bundle.analyses {
            let p = dir.join(format!("dcor_{}.csv", sanitize(&a.corpus_group)));
            a.dcor.write_csv(create(&p)?)?;
            written.push(p);

            let p = dir.join(format!("describe_{}.csv", sanitize(&a.corpus_group)));
            let mut w = csv_writer(create(&p)?);
            for s in &a.describe {
                w.serialize(s)?;
            }
            w.flush().map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }

        let mut norms: Vec<Normalization> = Vec::new();
        for a in &bundle.analyses {
            for r in &a.agreement {
                if !norms.contains(&r.normalization) {
                    norms.push(r.normalization);
                }
            }
        }
        for norm in norms {
            let p = dir.join(format!("agreement_{norm}.csv"));
            let mut w = csv_writer(create(&p)?);
            w.write_record(["corpus_group", "tool", "rate", "n_documents", "n_ties"])?;
            for a in &bundle.analyses {
                for r in a.agreement.iter().filter(|r| r.normalization == norm) {
                    for (tool, rate) in r.tools.iter().zip(&r.rates) {
                        w.write_record([
                            a.corpus_group.as_str(),
                            tool,
                            &format_f64(*rate),
                            &r.n_documents.to_string(),
                            &r.n_ties.to_string(),
                        ])?;
                    }
                }
            }
            w.flush().map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
    }

    if formats.contains(&ReportFormat::Json) {
        let p = dir.join("summary.json");
        write_text(&p, &bundle.to_json()?)?;
        written.push(p);
    }

    if formats.contains(&ReportFormat::Svg) {
        for a in &bundle.analyses {
            let g = sanitize(&a.corpus_group);
            let p = dir.join(format!("dcor_{g}.svg"));
            write_text(&p, &heatmap_svg(&a.dcor, &format!("Distance correlation, {}", a.corpus_group)))?;
            written.push(p);
            let p = dir.join(format!("boxplot_{g}.svg"));
            write_text(&p, &boxplot_svg(&a.describe, &format!("Scores, {}", a.corpus_group)))?;
            written.push(p);
        }
    }

    if formats.contains(&ReportFormat::Dot) {
        for (id, dot) in &bundle.trees {
            let p = dir.join(format!("tree_{}.dot", sanitize(id)));
            write_text(&p, dot)?;
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorers::{Atom, OutputClass, SynthDist};

    fn tools() -> Vec<ToolSpec> {
        vec![
            ToolSpec::synthetic(
                "a",
                OutputClass::Continuous,
                SynthDist::ClippedGaussian { mean: -0.3, std: 0.2 },
                1,
            ),
            ToolSpec::synthetic(
                "b",
                OutputClass::Discrete3,
                SynthDist::PointMass {
                    atoms: vec![Atom { value: -1.0, prob: 0.2 }, Atom { value: 1.0, prob: 0.8 }],
                },
                2,
            ),
            ToolSpec::lexicon_compound("vader_like", OutputClass::Continuous),
        ]
    }

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            name: "t".into(),
            seed: 9,
            mode: RunMode::Grid,
            corpora: vec![CorpusConfig {
                name: "tw".into(),
                source: CorpusSource::Synthetic {
                    spec: SynthCorpusSpec {
                        n_docs: 400,
                        ..Default::default()
                    },
                },
                groups: BTreeSet::from(["C1".to_string()]),
            }],
            corpus_groups: vec!["C1".into()],
            tools: tools(),
            tool_groups: vec![ToolGroup::All],
            normalizations: vec![Normalization::Raw],
            chunk_sizes: vec![20],
            oversample_factor: 2,
            classifiers: vec![ClassifierSpec::Tree { max_depth: 3 }],
            use_scaler: false,
            monte_carlo: MonteCarloConfig::default(),
            exclude_ties: false,
            analysis: true,
            workers: Some(2),
        }
    }

    #[test]
    fn group_labels() {
        let t = tools();
        assert_eq!(ToolGroup::All.labels(&t).len(), 6);
        assert_eq!(ToolGroup::Continuous.labels(&t).len(), 4);
        assert_eq!(
            ToolGroup::DiscreteSentences.labels(&t),
            vec![("b".to_string(), ScoreMode::SentenceMean)]
        );
    }

    #[test]
    fn default_mlp_grid_has_twelve_points() {
        assert_eq!(MlpGrid::default().points(0).len(), 12);
    }

    #[test]
    fn single_cell_gives_single_record() {
        let b = run_experiment(&config()).unwrap();
        assert_eq!(b.cells.len(), 1);
        assert_eq!(b.n_failed(), 0, "{:?}", b.cells[0].error);
        assert_eq!(b.cells[0].n_classes, Some(6));
        assert_eq!(b.trees.len(), 1);
        assert_eq!(b.analyses[0].dcor.tools.len(), 6);
    }

    #[test]
    fn grid_is_complete() {
        let mut c = config();
        c.corpora.push(CorpusConfig {
            name: "wiki".into(),
            source: CorpusSource::Synthetic {
                spec: SynthCorpusSpec::default(),
            },
            groups: BTreeSet::from(["C2".to_string()]),
        });
        c.corpus_groups = vec![];
        c.normalizations = vec![Normalization::Raw, Normalization::N3];
        c.chunk_sizes = vec![10, 20];
        c.classifiers.push(ClassifierSpec::Knn { k: 3 });
        c.analysis = false;
        let b = run_experiment(&c).unwrap();
        // C1, C2 and the implied C3
        assert_eq!(b.cells.len(), 3 * 2 * 2 * 2);
        let ids: BTreeSet<&String> = b.cells.iter().map(|c| &c.id).collect();
        assert_eq!(ids.len(), b.cells.len());
    }

    #[test]
    fn failing_cell_is_isolated() {
        let mut c = config();
        c.chunk_sizes = vec![20, 5000];
        let b = run_experiment(&c).unwrap();
        assert_eq!(b.n_failed(), 1);
        assert!(b.cells[1].error.as_deref().unwrap().contains("exceeds"));
        assert_eq!(b.cells[0].status, CellStatus::Ok);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut c = config();
        c.classifiers = vec![
            ClassifierSpec::Svm(SvmParams::rbf()),
            ClassifierSpec::Mlp {
                grid: MlpGrid {
                    hidden_sizes: vec![5, 10],
                    epochs: vec![5],
                    ..Default::default()
                },
            },
        ];
        c.workers = Some(1);
        let one = run_experiment(&c).unwrap();
        c.workers = Some(4);
        let four = run_experiment(&c).unwrap();
        assert_eq!(one.deterministic_json().unwrap(), four.deterministic_json().unwrap());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = config();
        c.tool_groups = vec![ToolGroup::DiscreteSentences];
        assert!(matches!(c.validated(), Err(Error::InvalidConfig(_))));
        let mut c = config();
        c.chunk_sizes = vec![];
        assert!(c.validated().is_err());
        let mut c = config();
        c.classifiers = vec![ClassifierSpec::Knn { k: 5 }, ClassifierSpec::Knn { k: 5 }];
        assert!(c.validated().is_err());
        assert!(ExperimentConfig::from_json("{\"name\": \"x\", \"bogus\": 1}", None).is_err());
    }

    #[test]
    fn sweep_tie_prefers_small_hidden_then_low_lr() {
        let c = config();
        let prep = prepare(&c.clone().validated().unwrap()).unwrap();
        let labels = ToolGroup::All.labels(&c.tools);
        let table = labeled_table(&prep, "C1", &labels).unwrap();
        let chunks = sample_chunks(table.n_docs(), 20, 40, 1).unwrap();
        let ds = build_dataset(&table, &chunks, Normalization::Raw, &table.tools).unwrap();
        let split = split_dataset(&ds, 3).unwrap();
        let hp = MlpHyperparams {
            epochs: 5,
            ..Default::default()
        };
        let grid = vec![hp.clone(), hp.clone()];
        let (_, board) = sweep_mlp(&split.train, &split.dev, &grid).unwrap();
        assert_eq!(board.len(), 2);
        assert_eq!(board[0].dev_macro_f1, board[1].dev_macro_f1);
    }

    #[test]
    fn cells_csv_round_trips() {
        let mut c = config();
        c.chunk_sizes = vec![20, 5000];
        let b = run_experiment(&c).unwrap();
        let mut buf = Vec::new();
        write_cells_csv(&mut buf, &b.cells).unwrap();
        assert_eq!(read_cells_csv(&buf[..]).unwrap(), b.cells);
    }
}
