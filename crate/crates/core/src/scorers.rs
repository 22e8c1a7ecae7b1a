//! Sentiment scorers and the tool × document score table.
//!
//! Three kinds of tool are supported: a compound lexicon scorer with
//! negation and booster heuristics, a plain lexicon average, and synthetic
//! tools that draw scores from a fixed distribution. Any of them can be
//! wrapped in a discrete output class to emulate classifier-style tools.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus, Document};
use crate::error::{Error, Result};
use crate::rng::{hash_str, rng_for};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub entries: BTreeMap<String, f64>,
    pub negators: BTreeSet<String>,
    pub boosters: BTreeMap<String, f64>,
}

impl Lexicon {
    /// The demo lexicon shipped with the crate.
    pub fn bundled() -> &'static Lexicon {
        static BUNDLED: OnceLock<Lexicon> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            Lexicon::from_tsv(
                include_str!("../data/lexicon.tsv"),
                include_str!("../data/modifiers.tsv"),
            )
            .expect("bundled lexicon is valid")
        })
    }

    /// Parses `token<TAB>valence` lines plus a modifier file with
    /// `neg<TAB>token` and `boost<TAB>token<TAB>increment` lines.
    pub fn from_tsv(entries: &str, modifiers: &str) -> Result<Lexicon> {
        let bad = |line: usize, msg: &str| Error::MalformedLine {
            line,
            message: msg.to_string(),
        };
        let mut lex = Lexicon {
            entries: BTreeMap::new(),
            negators: BTreeSet::new(),
            boosters: BTreeMap::new(),
        };
        for (i, line) in content_lines(entries) {
            let mut parts = line.split('\t');
            let (Some(tok), Some(val)) = (parts.next(), parts.next()) else {
                return Err(bad(i, "expected token and valence"));
            };
            let v: f64 = val.trim().parse().map_err(|_| bad(i, "bad valence"))?;
            lex.entries.insert(tok.trim().to_lowercase(), v);
        }
        for (i, line) in content_lines(modifiers) {
            let parts: Vec<&str> = line.split('\t').map(str::trim).collect();
            match parts.as_slice() {
                ["neg", tok] => {
                    lex.negators.insert(tok.to_lowercase());
                }
                ["boost", tok, inc] => {
                    let inc: f64 = inc.parse().map_err(|_| bad(i, "bad increment"))?;
                    lex.boosters.insert(tok.to_lowercase(), inc);
                }
                _ => return Err(bad(i, "expected `neg` or `boost` entry")),
            }
        }
        lex.validate()?;
        Ok(lex)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::InvalidTool {
            tool: "<lexicon>".into(),
            message,
        };
        if let Some((t, v)) = self.entries.iter().find(|(_, v)| !(-1.0..=1.0).contains(*v)) {
            return Err(invalid(format!("valence {v} of `{t}` outside [-1, 1]")));
        }
        if let Some((t, v)) = self.boosters.iter().find(|(_, v)| !(**v > 0.0 && **v < 1.0)) {
            return Err(invalid(format!("booster `{t}` increment {v} outside (0, 1)")));
        }
        Ok(())
    }

    /// Lexicon words whose valence has the given sign, in sorted order.
    pub fn words_with_sign(&self, sign: i8) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, v)| (sign > 0 && **v > 0.0) || (sign < 0 && **v < 0.0))
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

fn content_lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    LexiconCompound,
    PatternAverage,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputClass {
    Continuous,
    Discrete3,
    Discrete5,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolGroupTag {
    Discrete,
    Continuous,
}

impl OutputClass {
    pub fn group_tag(self) -> ToolGroupTag {
        match self {
            OutputClass::Continuous => ToolGroupTag::Continuous,
            _ => ToolGroupTag::Discrete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    Text,
    SentenceMean,
}

impl ScoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Text => "text",
            ScoreMode::SentenceMean => "sentence_mean",
        }
    }
}

/// Parameters of the lexicon-driven scorers. Only `lexicon = "bundled"` is
/// resolvable in-process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconParams {
    pub lexicon: String,
    pub negation: bool,
    pub negation_factor: f64,
    pub negation_window: usize,
    pub boosters: bool,
    pub alpha: f64,
}

impl Default for LexiconParams {
    fn default() -> Self {
        LexiconParams {
            lexicon: "bundled".into(),
            negation: true,
            negation_factor: -0.74,
            negation_window: 3,
            boosters: true,
            alpha: 15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum SynthDist {
    PointMass { atoms: Vec<Atom> },
    ClippedGaussian { mean: f64, std: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolParams {
    Lexicon(LexiconParams),
    Synthetic {
        distribution: SynthDist,
        /// Selects an independent random stream, so two tools with the same
        /// distribution can still produce different draws.
        #[serde(default)]
        stream: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub kind: ToolKind,
    pub output_class: OutputClass,
    pub params: ToolParams,
    #[serde(default)]
    pub group_tags: BTreeSet<ToolGroupTag>,
}

impl ToolSpec {
    fn with_tags(name: String, kind: ToolKind, output_class: OutputClass, params: ToolParams) -> Self {
        ToolSpec {
            name,
            kind,
            output_class,
            params,
            group_tags: BTreeSet::from([output_class.group_tag()]),
        }
    }

    pub fn lexicon_compound(name: impl Into<String>, output_class: OutputClass) -> Self {
        Self::with_tags(
            name.into(),
            ToolKind::LexiconCompound,
            output_class,
            ToolParams::Lexicon(LexiconParams::default()),
        )
    }

    pub fn pattern_average(name: impl Into<String>, output_class: OutputClass) -> Self {
        Self::with_tags(
            name.into(),
            ToolKind::PatternAverage,
            output_class,
            ToolParams::Lexicon(LexiconParams::default()),
        )
    }

    pub fn synthetic(
        name: impl Into<String>,
        output_class: OutputClass,
        distribution: SynthDist,
        stream: u64,
    ) -> Self {
        Self::with_tags(
            name.into(),
            ToolKind::Synthetic,
            output_class,
            ToolParams::Synthetic {
                distribution,
                stream,
            },
        )
    }

    pub fn is_discrete(&self) -> bool {
        self.output_class != OutputClass::Continuous
    }

    /// Fills in missing group tags and checks every invariant.
    pub fn finalize(mut self) -> Result<Self> {
        if self.group_tags.is_empty() {
            self.group_tags.insert(self.output_class.group_tag());
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::InvalidTool {
            tool: self.name.clone(),
            message,
        };
        if self.name.is_empty() {
            return Err(invalid("empty name".into()));
        }
        if self.group_tags != BTreeSet::from([self.output_class.group_tag()]) {
            return Err(invalid(format!(
                "group tags {:?} inconsistent with output class {:?}",
                self.group_tags, self.output_class
            )));
        }
        match (&self.kind, &self.params) {
            (ToolKind::LexiconCompound | ToolKind::PatternAverage, ToolParams::Lexicon(p)) => {
                if p.lexicon != "bundled" {
                    return Err(invalid(format!("unknown lexicon `{}`", p.lexicon)));
                }
                if !(p.alpha > 0.0 && p.negation_factor.is_finite()) {
                    return Err(invalid("alpha must be positive and negation factor finite".into()));
                }
            }
            (ToolKind::Synthetic, ToolParams::Synthetic { distribution, .. }) => {
                validate_dist(distribution).map_err(invalid)?;
            }
            (kind, _) => {
                return Err(Error::UnknownToolKind {
                    tool: self.name.clone(),
                    kind: format!("{kind:?}"),
                })
            }
        }
        Ok(())
    }

    fn lexicon_params(&self) -> Result<&LexiconParams> {
        match (&self.kind, &self.params) {
            (ToolKind::LexiconCompound | ToolKind::PatternAverage, ToolParams::Lexicon(p)) => Ok(p),
            (kind, _) => Err(Error::UnknownToolKind {
                tool: self.name.clone(),
                kind: format!("{kind:?}"),
            }),
        }
    }
}

fn validate_dist(dist: &SynthDist) -> std::result::Result<(), String> {
    match dist {
        SynthDist::PointMass { atoms } => {
            if atoms.is_empty() {
                return Err("point mass needs at least one atom".into());
            }
            if atoms
                .iter()
                .any(|a| !((-1.0..=1.0).contains(&a.value) && a.prob >= 0.0))
            {
                return Err("atoms need values in [-1, 1] and non-negative probabilities".into());
            }
            let total: f64 = atoms.iter().map(|a| a.prob).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(format!("probabilities sum to {total}, expected 1"));
            }
        }
        SynthDist::ClippedGaussian { mean, std } => {
            if !mean.is_finite() || !std.is_finite() || *std < 0.0 {
                return Err("gaussian needs finite mean and non-negative std".into());
            }
        }
    }
    Ok(())
}

/// `s / sqrt(s² + alpha)`: maps an unbounded valence sum into (-1, 1).
#[inline]
pub fn compound_normalize(sum: f64, alpha: f64) -> f64 {
    sum / (sum * sum + alpha).sqrt()
}

pub fn lexicon_compound(tokens: &[String], lexicon: &Lexicon) -> f64 {
    lexicon_compound_with(tokens, lexicon, &LexiconParams::default())
}

pub fn lexicon_compound_with(tokens: &[String], lexicon: &Lexicon, params: &LexiconParams) -> f64 {
    let mut sum = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let Some(&valence) = lexicon.entries.get(tok) else {
            continue;
        };
        let mut v = valence;
        if params.boosters && i > 0 {
            if let Some(inc) = lexicon.boosters.get(&tokens[i - 1]) {
                v += inc * v.signum() * f64::from(u8::from(v != 0.0));
            }
        }
        if params.negation {
            let from = i.saturating_sub(params.negation_window);
            if tokens[from..i].iter().any(|t| lexicon.negators.contains(t)) {
                v *= params.negation_factor;
            }
        }
        sum += v;
    }
    compound_normalize(sum, params.alpha)
}

pub fn pattern_average(tokens: &[String], lexicon: &Lexicon) -> f64 {
    let (sum, n) = tokens
        .iter()
        .filter_map(|t| lexicon.entries.get(t))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

const FIVE_LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

pub fn discretize_output(score: f64, output_class: OutputClass) -> f64 {
    match output_class {
        OutputClass::Continuous => score,
        OutputClass::Binary => {
            if score >= 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        OutputClass::Discrete3 => {
            if score <= -1.0 / 3.0 {
                -1.0
            } else if score >= 1.0 / 3.0 {
                1.0
            } else {
                0.0
            }
        }
        OutputClass::Discrete5 => {
            let mut best = FIVE_LEVELS[0];
            let mut best_d = f64::INFINITY;
            for &level in &FIVE_LEVELS {
                let d = (score - level).abs();
                if d < best_d || (d == best_d && level.abs() < best.abs()) {
                    best = level;
                    best_d = d;
                }
            }
            best
        }
    }
}

/// Scores a piece of text with a lexicon tool, discretized to the tool's
/// output class.
pub fn score_text(tool: &ToolSpec, text: &str) -> Result<f64> {
    let params = tool.lexicon_params()?;
    let lexicon = Lexicon::bundled();
    let tokens = corpus::tokenize(text);
    let raw = match tool.kind {
        ToolKind::LexiconCompound => lexicon_compound_with(&tokens, lexicon, params),
        ToolKind::PatternAverage => pattern_average(&tokens, lexicon),
        ToolKind::Synthetic => unreachable!("rejected by lexicon_params"),
    };
    Ok(discretize_output(raw.clamp(-1.0, 1.0), tool.output_class))
}

pub fn score_document(tool: &ToolSpec, doc: &Document, mode: ScoreMode) -> Result<f64> {
    let score = match mode {
        ScoreMode::Text => score_text(tool, &doc.text)?,
        ScoreMode::SentenceMean => {
            let sentences = doc.sentences();
            if sentences.is_empty() {
                score_text(tool, &doc.text)?
            } else {
                let mut sum = 0.0;
                for s in &sentences {
                    sum += score_text(tool, s)?;
                }
                sum / sentences.len() as f64
            }
        }
    };
    Ok(score.clamp(-1.0, 1.0))
}

fn draw<R: Rng>(dist: &SynthDist, rng: &mut R) -> f64 {
    match dist {
        SynthDist::PointMass { atoms } => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for a in atoms {
                acc += a.prob;
                if u < acc {
                    return a.value;
                }
            }
            atoms.last().map(|a| a.value).unwrap_or(0.0)
        }
        SynthDist::ClippedGaussian { mean, std } => {
            (mean + std * corpus::standard_normal(rng)).clamp(-1.0, 1.0)
        }
    }
}

/// One i.i.d. draw per document.
pub fn simulate_tool(tool: &ToolSpec, n_docs: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_tool_counts(tool, &vec![1; n_docs], seed)
}

/// For each document draws `counts[j]` per-sentence scores (each mapped to
/// the output class) and returns their mean.
pub fn simulate_tool_counts(tool: &ToolSpec, counts: &[usize], seed: u64) -> Result<Vec<f64>> {
    let ToolParams::Synthetic {
        distribution,
        stream,
    } = &tool.params
    else {
        return Err(Error::UnknownToolKind {
            tool: tool.name.clone(),
            kind: format!("{:?}", tool.kind),
        });
    };
    if tool.kind != ToolKind::Synthetic {
        return Err(Error::UnknownToolKind {
            tool: tool.name.clone(),
            kind: format!("{:?}", tool.kind),
        });
    }
    validate_dist(distribution).map_err(|message| Error::InvalidTool {
        tool: tool.name.clone(),
        message,
    })?;
    let mut rng = rng_for(seed, &[hash_str("simulate_tool"), *stream]);
    Ok(counts
        .iter()
        .map(|&c| {
            let c = c.max(1);
            let sum: f64 = (0..c)
                .map(|_| discretize_output(draw(distribution, &mut rng), tool.output_class))
                .sum();
            (sum / c as f64).clamp(-1.0, 1.0)
        })
        .collect())
}

/// Scores, rows = tools, columns = documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub tools: Vec<String>,
    pub doc_ids: Vec<String>,
    pub mode: ScoreMode,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(
        tools: Vec<String>,
        doc_ids: Vec<String>,
        mode: ScoreMode,
        scores: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let t = ScoreTable {
            tools,
            doc_ids,
            mode,
            scores,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scores.len() != self.tools.len() {
            return Err(Error::LengthMismatch {
                left: self.scores.len(),
                right: self.tools.len(),
            });
        }
        for row in &self.scores {
            if row.len() != self.doc_ids.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: self.doc_ids.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && (-1.0..=1.0).contains(*v))) {
                return Err(Error::InvalidTool {
                    tool: "<table>".into(),
                    message: format!("score {v} outside [-1, 1]"),
                });
            }
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.tools.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(Error::InvalidTool {
                tool: dup.clone(),
                message: "duplicate tool name in table".into(),
            });
        }
        Ok(())
    }

    pub fn n_tools(&self) -> usize {
        self.tools.len()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn tool_index(&self, name: &str) -> Option<usize> {
        self.tools.iter().position(|t| t == name)
    }

    pub fn row(&self, name: &str) -> Option<&[f64]> {
        self.tool_index(name).map(|i| self.scores[i].as_slice())
    }

    /// Keeps the named tools in the order given.
    pub fn select_tools<S: AsRef<str>>(&self, names: &[S]) -> Result<ScoreTable> {
        let mut tools = Vec::with_capacity(names.len());
        let mut scores = Vec::with_capacity(names.len());
        for n in names {
            let i = self
                .tool_index(n.as_ref())
                .ok_or_else(|| Error::UnknownTool(n.as_ref().to_string()))?;
            tools.push(self.tools[i].clone());
            scores.push(self.scores[i].clone());
        }
        ScoreTable::new(tools, self.doc_ids.clone(), self.mode, scores)
    }

    /// Appends the documents of `other`, which must list the same tools.
    pub fn append_docs(&mut self, other: &ScoreTable) -> Result<()> {
        if self.tools != other.tools {
            return Err(Error::InvalidTool {
                tool: "<table>".into(),
                message: "cannot append tables with different tools".into(),
            });
        }
        self.doc_ids.extend(other.doc_ids.iter().cloned());
        for (row, extra) in self.scores.iter_mut().zip(&other.scores) {
            row.extend_from_slice(extra);
        }
        Ok(())
    }

    /// Stacks the tool rows of `other` under this table's, for tables over
    /// the same documents.
    pub fn stack_tools(&self, other: &ScoreTable) -> Result<ScoreTable> {
        if self.doc_ids != other.doc_ids {
            return Err(Error::LengthMismatch {
                left: self.n_docs(),
                right: other.n_docs(),
            });
        }
        let mut tools = self.tools.clone();
        tools.extend(other.tools.iter().cloned());
        let mut scores = self.scores.clone();
        scores.extend(other.scores.iter().cloned());
        ScoreTable::new(tools, self.doc_ids.clone(), self.mode, scores)
    }

    pub fn renamed(mut self, f: impl Fn(&str) -> String) -> Self {
        self.tools = self.tools.iter().map(|t| f(t)).collect();
        self
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["doc_id".to_string()];
        header.extend(self.tools.iter().cloned());
        w.write_record(&header)?;
        for (j, id) in self.doc_ids.iter().enumerate() {
            let mut rec = Vec::with_capacity(self.tools.len() + 1);
            rec.push(id.clone());
            rec.extend(self.scores.iter().map(|row| format_f64(row[j])));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, mode: ScoreMode) -> Result<ScoreTable> {
        let mut r = csv::ReaderBuilder::new().from_reader(reader);
        let header = r.headers()?.clone();
        if header.get(0) != Some("doc_id") {
            return Err(Error::MalformedLine {
                line: 1,
                message: "header must start with doc_id".into(),
            });
        }
        let tools: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut doc_ids = Vec::new();
        let mut scores = vec![Vec::new(); tools.len()];
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != tools.len() + 1 {
                return Err(Error::MalformedLine {
                    line,
                    message: format!("expected {} fields, got {}", tools.len() + 1, rec.len()),
                });
            }
            doc_ids.push(rec[0].to_string());
            for (k, field) in rec.iter().skip(1).enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::MalformedLine {
                    line,
                    message: format!("bad score `{field}`"),
                })?;
                scores[k].push(v);
            }
        }
        ScoreTable::new(tools, doc_ids, mode, scores)
    }
}

/// Shortest representation that parses back to the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Sidecar JSON written next to a score-table CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableManifest {
    pub mode: ScoreMode,
    pub tools: Vec<ToolSpec>,
    pub corpus_name: String,
    pub seed: u64,
}

pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn save_table(table: &ScoreTable, manifest: &TableManifest, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    table.write_csv(BufWriter::new(file))?;
    let mpath = manifest_path(csv_path);
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(&mpath, json + "\n").map_err(|e| Error::io(&mpath, e))
}

pub fn load_table(csv_path: impl AsRef<Path>) -> Result<(ScoreTable, TableManifest)> {
    let csv_path = csv_path.as_ref();
    let mpath = manifest_path(csv_path);
    let mtext = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: TableManifest = serde_json::from_str(&mtext)?;
    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let table = ScoreTable::read_csv(file, manifest.mode)?;
    Ok((table, manifest))
}

pub fn build_score_table(
    corpus: &Corpus,
    tools: &[ToolSpec],
    mode: ScoreMode,
    seed: u64,
) -> Result<ScoreTable> {
    if tools.len() < 2 {
        return Err(Error::TooFewTools {
            needed: 2,
            got: tools.len(),
        });
    }
    for t in tools {
        t.validate()?;
    }
    let counts: Vec<usize> = match mode {
        ScoreMode::Text => vec![1; corpus.len()],
        ScoreMode::SentenceMean => corpus.documents.iter().map(|d| d.sentences().len().max(1)).collect(),
    };
    let scores = tools
        .par_iter()
        .map(|tool| match tool.kind {
            ToolKind::Synthetic => simulate_tool_counts(tool, &counts, seed),
            _ => corpus
                .documents
                .par_iter()
                .map(|doc| score_document(tool, doc, mode))
                .collect::<Result<Vec<f64>>>(),
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreTable::new(
        tools.iter().map(|t| t.name.clone()).collect(),
        corpus.doc_ids(),
        mode,
        scores,
    )
}
