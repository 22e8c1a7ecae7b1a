//! Document collections: JSONL loading, sentence splitting and a seeded
//! synthetic generator for desk-scale experiments.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_for;
use crate::scorers::Lexicon;

/// One line of a JSONL corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub lang: String,
    #[serde(default)]
    pub genre: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<String>>,
    /// Ground-truth sentiment of synthetic documents. Scorers never read it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_sentiment: Option<f64>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            lang: String::new(),
            genre: String::new(),
            text: text.into(),
            sentences: None,
            latent_sentiment: None,
        }
    }

    /// Stored sentences, or the rule-based split of `text` when unset.
    pub fn sentences(&self) -> Vec<String> {
        match &self.sentences {
            Some(s) => s.clone(),
            None => split_sentences(&self.text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub group_tags: BTreeSet<String>,
    pub documents: Vec<Document>,
}

pub const CORPUS_GROUPS: [&str; 4] = ["C1", "C2", "C3", "C4"];

impl Corpus {
    pub fn new(
        name: impl Into<String>,
        group_tags: BTreeSet<String>,
        documents: Vec<Document>,
    ) -> Result<Self> {
        let corpus = Corpus {
            name: name.into(),
            group_tags,
            documents,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        if self.documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if self.group_tags.is_empty() {
            return Err(Error::InvalidCorpus(format!(
                "corpus {} has no group tags",
                self.name
            )));
        }
        if let Some(bad) = self.group_tags.iter().find(|t| !CORPUS_GROUPS.contains(&t.as_str())) {
            return Err(Error::InvalidCorpus(format!("unknown group tag {bad}")));
        }
        let mut seen = HashSet::new();
        for (i, doc) in self.documents.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(Error::InvalidCorpus(format!("document {i} has an empty id")));
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: doc.id.clone(),
                    line: i + 1,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
}

/// Corpus groups implied by a genre label when a file carries no explicit
/// grouping: tweets go to C1, encyclopedic and news text to C2, both of
/// those to C3, parallel parliament text to C4.
pub fn groups_for_genre(genre: &str) -> &'static [&'static str] {
    match genre.to_ascii_lowercase().as_str() {
        "twitter" | "tweet" | "tweets" => &["C1", "C3"],
        "wiki" | "wikipedia" | "news" | "newspaper" => &["C2", "C3"],
        "europarl" | "parallel" => &["C4"],
        _ => &["C3"],
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file), name),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R, name: impl Into<String>) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: lineno,
            message: e.to_string(),
        })?;
        if doc.id.is_empty() {
            return Err(Error::MalformedLine {
                line: lineno,
                message: "empty id".into(),
            });
        }
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId {
                id: doc.id,
                line: lineno,
            });
        }
        documents.push(doc);
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let group_tags = documents
        .iter()
        .flat_map(|d| groups_for_genre(&d.genre).iter().map(|g| g.to_string()))
        .collect();
    Corpus::new(name, group_tags, documents)
}

pub fn write_jsonl<W: Write>(corpus: &Corpus, mut writer: W) -> Result<()> {
    for doc in &corpus.documents {
        serde_json::to_writer(&mut writer, doc)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_jsonl(corpus, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Splits after `.`, `!` or `?` when followed by whitespace.
///
/// Segments are trimmed and empty ones dropped; whitespace-only input gives
/// no sentences.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    let end = i + c.len_utf8();
                    push_trimmed(&mut out, &text[start..end]);
                    start = end;
                }
            }
        }
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed(out: &mut Vec<String>, segment: &str) {
    let s = segment.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Lowercased whitespace tokens with surrounding punctuation stripped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let t = raw.trim_matches(|c: char| !(c.is_alphanumeric() || c == '\''));
            let t = t.trim_matches('\'');
            (!t.is_empty()).then(|| t.to_lowercase())
        })
        .collect()
}

/// Distribution of the per-document latent sentiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum LatentSentiment {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl LatentSentiment {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let v = match *self {
            LatentSentiment::Fixed { value } => value,
            LatentSentiment::Uniform { low, high } => {
                if high > low {
                    rng.gen_range(low..high)
                } else {
                    low
                }
            }
            LatentSentiment::Gaussian { mean, std } => mean + std * standard_normal(rng),
        };
        v.clamp(-1.0, 1.0)
    }
}

pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; u1 in (0, 1] keeps ln finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthCorpusSpec {
    pub name: String,
    pub n_docs: usize,
    pub lang: String,
    pub genre: String,
    pub group_tags: BTreeSet<String>,
    pub latent: LatentSentiment,
    /// Inclusive range.
    pub sentences_per_doc: (usize, usize),
    /// Inclusive range.
    pub tokens_per_sentence: (usize, usize),
    /// Probability that a token slot carries a lexicon word.
    pub sentiment_rate: f64,
    /// Probability that a lexicon word is preceded by a booster; half that
    /// rate for a negator.
    pub modifier_rate: f64,
}

impl Default for SynthCorpusSpec {
    fn default() -> Self {
        SynthCorpusSpec {
            name: "synthetic".into(),
            n_docs: 100,
            lang: "en".into(),
            genre: "synthetic".into(),
            group_tags: BTreeSet::from(["C3".to_string()]),
            latent: LatentSentiment::Uniform {
                low: -1.0,
                high: 1.0,
            },
            sentences_per_doc: (1, 4),
            tokens_per_sentence: (4, 12),
            sentiment_rate: 0.3,
            modifier_rate: 0.1,
        }
    }
}

pub fn generate_synthetic_corpus(spec: &SynthCorpusSpec, seed: u64) -> Result<Corpus> {
    if spec.n_docs == 0 {
        return Err(Error::InvalidCorpus("n_docs must be at least 1".into()));
    }
    let (smin, smax) = spec.sentences_per_doc;
    let (tmin, tmax) = spec.tokens_per_sentence;
    if smin == 0 || smin > smax || tmin == 0 || tmin > tmax {
        return Err(Error::InvalidCorpus(
            "sentence and token ranges must be non-empty and start at 1 or more".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.sentiment_rate) || !(0.0..=1.0).contains(&spec.modifier_rate) {
        return Err(Error::InvalidCorpus("rates must lie in [0, 1]".into()));
    }

    let lexicon = Lexicon::bundled();
    let positive = lexicon.words_with_sign(1);
    let negative = lexicon.words_with_sign(-1);
    let negators: Vec<&str> = lexicon.negators.iter().map(String::as_str).collect();
    let boosters: Vec<&str> = lexicon.boosters.keys().map(String::as_str).collect();
    let filler = filler_tokens();

    let documents = (0..spec.n_docs)
        .map(|i| {
            let mut rng = rng_for(seed, &[i as u64]);
            let latent = spec.latent.sample(&mut rng);
            let p_pos = (1.0 + latent) / 2.0;
            let n_sent = rng.gen_range(smin..=smax);
            let mut sentences: Vec<Vec<String>> = Vec::with_capacity(n_sent);
            let mut has_sentiment = false;
            for _ in 0..n_sent {
                let n_tok = rng.gen_range(tmin..=tmax);
                let mut words = Vec::with_capacity(n_tok + 2);
                for _ in 0..n_tok {
                    if rng.gen::<f64>() < spec.sentiment_rate {
                        has_sentiment = true;
                        push_sentiment_word(&mut words, &mut rng, p_pos, spec.modifier_rate, &positive, &negative, &negators, &boosters);
                    } else {
                        words.push(filler.choose(&mut rng).unwrap().to_string());
                    }
                }
                sentences.push(words);
            }
            if !has_sentiment {
                let s = rng.gen_range(0..sentences.len());
                let pos = rng.gen_range(0..sentences[s].len());
                let pool = if rng.gen::<f64>() < p_pos { &positive } else { &negative };
                sentences[s][pos] = pool.choose(&mut rng).unwrap().to_string();
            }
            let sentences: Vec<String> = sentences
                .into_iter()
                .map(|words| {
                    let mut s = capitalize(&words.join(" "));
                    let r: f64 = rng.gen();
                    s.push(if r < 0.8 { '.' } else if r < 0.9 { '!' } else { '?' });
                    s
                })
                .collect();
            Document {
                id: format!("{}-{:06}", spec.name, i),
                lang: spec.lang.clone(),
                genre: spec.genre.clone(),
                text: sentences.join(" "),
                sentences: Some(sentences),
                latent_sentiment: Some(latent),
            }
        })
        .collect();

    Corpus::new(spec.name.clone(), spec.group_tags.clone(), documents)
}

#[allow(clippy::too_many_arguments)]
fn push_sentiment_word<R: Rng>(
    words: &mut Vec<String>,
    rng: &mut R,
    p_pos: f64,
    modifier_rate: f64,
    positive: &[&str],
    negative: &[&str],
    negators: &[&str],
    boosters: &[&str],
) {
    let r: f64 = rng.gen();
    if r < modifier_rate && !boosters.is_empty() {
        words.push(boosters.choose(rng).unwrap().to_string());
    } else if r < 1.5 * modifier_rate && !negators.is_empty() {
        words.push(negators.choose(rng).unwrap().to_string());
    }
    let pool = if rng.gen::<f64>() < p_pos { positive } else { negative };
    words.push(pool.choose(rng).unwrap().to_string());
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Neutral tokens used as filler by the synthetic generator.
pub fn filler_tokens() -> Vec<&'static str> {
    include_str!("../data/filler.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
}
