//! From score tables to labeled feature vectors.
//!
//! A chunk is a random subset of documents; one tool's scores on a chunk
//! are summarized by 13 order and dispersion statistics. The Monte Carlo
//! path instead resamples 1% of a tool's scores with replacement and adds
//! two entropy features.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::Normalization;
use crate::rng::{hash_str, rng_for};
use crate::scorers::{format_f64, ScoreTable};

pub const MOMENT_NAMES: [&str; 13] = [
    "mean", "std", "var", "median", "min", "max", "p5", "p10", "p25", "p50", "p75", "p90", "p95",
];

pub const FEATURE_NAMES: [&str; 15] = [
    "mean",
    "std",
    "var",
    "median",
    "min",
    "max",
    "p5",
    "p10",
    "p25",
    "p50",
    "p75",
    "p90",
    "p95",
    "entropy_hist",
    "entropy_value",
];

const PERCENTILES: [f64; 7] = [5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0];

pub const DEFAULT_OVERSAMPLE: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_indices: Vec<usize>,
    pub size: usize,
    pub with_replacement: bool,
}

/// Default chunk count: `floor(n_docs / chunk_size) * oversample`.
pub fn default_chunk_count(n_docs: usize, chunk_size: usize, oversample: usize) -> usize {
    if chunk_size == 0 {
        return 0;
    }
    (n_docs / chunk_size) * oversample
}

/// Draws `n_chunks` chunks of `chunk_size` distinct document indices. Chunk
/// `i` depends only on `(seed, i)`.
pub fn sample_chunks(n_docs: usize, chunk_size: usize, n_chunks: usize, seed: u64) -> Result<Vec<Chunk>> {
    if chunk_size == 0 {
        return Err(Error::EmptyInput("chunk size must be at least 1"));
    }
    if chunk_size > n_docs {
        return Err(Error::ChunkTooLarge { chunk_size, n_docs });
    }
    Ok((0..n_chunks)
        .map(|i| {
            let mut rng = rng_for(seed, &[hash_str("chunk"), i as u64]);
            let doc_indices = index::sample(&mut rng, n_docs, chunk_size).into_vec();
            Chunk {
                doc_indices,
                size: chunk_size,
                with_replacement: false,
            }
        })
        .collect())
}

/// Mean, std, var, median, min, max and seven percentiles, in the order of
/// [`MOMENT_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentVector(pub [f64; 13]);

impl MomentVector {
    pub fn mean(&self) -> f64 {
        self.0[0]
    }
    pub fn std(&self) -> f64 {
        self.0[1]
    }
    pub fn var(&self) -> f64 {
        self.0[2]
    }
    pub fn median(&self) -> f64 {
        self.0[3]
    }
    pub fn min(&self) -> f64 {
        self.0[4]
    }
    pub fn max(&self) -> f64 {
        self.0[5]
    }
    /// Percentiles p5..p95.
    pub fn percentiles(&self) -> &[f64] {
        &self.0[6..13]
    }
    pub fn get(&self, name: &str) -> Option<f64> {
        MOMENT_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

/// Linear interpolation at rank `p/100 * (n - 1)` of already sorted values.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    (a + (b - a) * (pos - lo as f64)).clamp(a, b)
}

pub fn compute_moments(values: &[f64]) -> Result<MomentVector> {
    if values.is_empty() {
        return Err(Error::EmptyInput("moments need at least one value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let mut out = [0.0; 13];
    out[0] = mean;
    out[1] = std;
    out[2] = var;
    out[4] = sorted[0];
    out[5] = sorted[sorted.len() - 1];
    for (k, p) in PERCENTILES.iter().enumerate() {
        out[6 + k] = percentile_sorted(&sorted, *p);
    }
    out[3] = out[9];
    Ok(MomentVector(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyVariant {
    /// Over 10 equal-width bins on `[-1, 1]`.
    Hist,
    /// Over the distinct values.
    Value,
}

/// Shannon entropy in nats.
pub fn compute_entropy(values: &[f64], variant: EntropyVariant) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let counts: Vec<usize> = match variant {
        EntropyVariant::Hist => {
            let mut bins = [0usize; 10];
            for &v in values {
                let b = (((v + 1.0) / 0.2).floor().max(0.0) as usize).min(9);
                bins[b] += 1;
            }
            bins.to_vec()
        }
        EntropyVariant::Value => {
            let mut map: HashMap<u64, usize> = HashMap::new();
            for &v in values {
                // fold -0.0 into 0.0
                *map.entry((v + 0.0).to_bits()).or_default() += 1;
            }
            map.into_values().collect()
        }
    };
    let n = values.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// The 13 moments followed by histogram and distinct-value entropy.
pub fn compute_features15(values: &[f64]) -> Result<[f64; 15]> {
    let m = compute_moments(values)?;
    let mut out = [0.0; 15];
    out[..13].copy_from_slice(&m.0);
    out[13] = compute_entropy(values, EntropyVariant::Hist);
    out[14] = compute_entropy(values, EntropyVariant::Value);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let ds = LabeledDataset {
            features,
            labels,
            feature_names,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::LengthMismatch {
                left: self.features.len(),
                right: self.labels.len(),
            });
        }
        let dim = self.feature_names.len();
        if let Some(row) = self.features.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return Err(Error::DatasetTooSmall(format!(
                "label {l} outside [0, {})",
                self.class_names.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Keeps the given feature columns.
    pub fn project(&self, columns: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self
                .features
                .iter()
                .map(|r| columns.iter().map(|&c| r[c]).collect())
                .collect(),
            labels: self.labels.clone(),
            feature_names: columns.iter().map(|&c| self.feature_names[c].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// CSV with header `label,f0,f1,...`; labels are class indices.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["label".to_string()];
        header.extend((0..self.n_features()).map(|i| format!("f{i}")));
        w.write_record(&header)?;
        for (row, label) in self.features.iter().zip(&self.labels) {
            let mut rec = vec![label.to_string()];
            rec.extend(row.iter().map(|v| format_f64(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, feature_names: Vec<String>, class_names: Vec<String>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(reader);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| Error::MalformedLine { line: i + 2, message };
            let label: usize = rec
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad label".into()))?;
            let row = rec
                .iter()
                .skip(1)
                .map(|f| f.parse::<f64>().map_err(|_| bad(format!("bad value `{f}`"))))
                .collect::<Result<Vec<_>>>()?;
            labels.push(label);
            features.push(row);
        }
        LabeledDataset::new(features, labels, feature_names, class_names)
    }
}

/// Sidecar JSON describing how a dataset CSV was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub norm: Normalization,
    pub seed: u64,
    pub chunk_size: Option<usize>,
    pub n_chunks: Option<usize>,
    pub monte_carlo_m: Option<usize>,
}

pub fn save_dataset(ds: &LabeledDataset, manifest: &DatasetManifest, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let f = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    ds.write_csv(BufWriter::new(f))?;
    let mpath = csv_path.with_extension("json");
    std::fs::write(&mpath, serde_json::to_string_pretty(manifest)? + "\n").map_err(|e| Error::io(&mpath, e))
}

pub fn load_dataset(csv_path: impl AsRef<Path>) -> Result<(LabeledDataset, DatasetManifest)> {
    let csv_path = csv_path.as_ref();
    let mpath = csv_path.with_extension("json");
    let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    let f = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let ds = LabeledDataset::read_csv(f, manifest.feature_names.clone(), manifest.class_names.clone())?;
    Ok((ds, manifest))
}

/// One sample per (chunk, tool): the moments of that tool's normalized
/// scores on the chunk. Labels follow the order of `tool_filter`.
pub fn build_dataset<S: AsRef<str>>(
    table: &ScoreTable,
    chunks: &[Chunk],
    norm: Normalization,
    tool_filter: &[S],
) -> Result<LabeledDataset> {
    let mut rows = Vec::with_capacity(tool_filter.len());
    for name in tool_filter {
        let idx = table
            .tool_index(name.as_ref())
            .ok_or_else(|| Error::UnknownTool(name.as_ref().to_string()))?;
        if rows.contains(&idx) {
            return Err(Error::UnknownTool(format!("{} listed twice", name.as_ref())));
        }
        rows.push(idx);
    }
    if rows.len() < 2 {
        return Err(Error::TooFewTools {
            needed: 2,
            got: rows.len(),
        });
    }
    let normalized: Vec<Vec<f64>> = rows.iter().map(|&r| norm.apply_all(&table.scores[r])).collect();
    let mut features = Vec::with_capacity(chunks.len() * rows.len());
    let mut labels = Vec::with_capacity(chunks.len() * rows.len());
    let mut buf = Vec::new();
    for chunk in chunks {
        if let Some(&bad) = chunk.doc_indices.iter().find(|&&i| i >= table.n_docs()) {
            return Err(Error::LengthMismatch {
                left: bad,
                right: table.n_docs(),
            });
        }
        for (label, row) in normalized.iter().enumerate() {
            buf.clear();
            buf.extend(chunk.doc_indices.iter().map(|&i| row[i]));
            features.push(compute_moments(&buf)?.0.to_vec());
            labels.push(label);
        }
    }
    LabeledDataset::new(
        features,
        labels,
        MOMENT_NAMES.iter().map(|s| s.to_string()).collect(),
        rows.iter().map(|&r| table.tools[r].clone()).collect(),
    )
}

/// Size of one Monte Carlo resample: 1% of the documents, rounded up.
pub fn monte_carlo_sample_size(n_docs: usize) -> usize {
    n_docs.div_ceil(100)
}

/// The feature columns kept for a given subset size; drawn once per
/// dataset and returned in ascending order.
pub fn feature_subset(feature_subset_size: usize, seed: u64) -> Result<Vec<usize>> {
    if !(1..=15).contains(&feature_subset_size) {
        return Err(Error::FeatureSubsetSize(feature_subset_size));
    }
    let mut rng = rng_for(seed, &[hash_str("feature_subset"), feature_subset_size as u64]);
    let mut cols = index::sample(&mut rng, 15, feature_subset_size).into_vec();
    cols.sort_unstable();
    Ok(cols)
}

/// `m` samples per tool, each the 15 features of a 1% resample drawn with
/// replacement, projected onto one random feature subset.
pub fn monte_carlo_dataset(
    table: &ScoreTable,
    m: usize,
    feature_subset_size: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    let cols = feature_subset(feature_subset_size, seed)?;
    if table.n_docs() == 0 {
        return Err(Error::EmptyInput("monte carlo needs at least one document"));
    }
    if table.n_tools() < 2 {
        return Err(Error::TooFewTools {
            needed: 2,
            got: table.n_tools(),
        });
    }
    let size = monte_carlo_sample_size(table.n_docs());
    let mut features = Vec::with_capacity(table.n_tools() * m);
    let mut labels = Vec::with_capacity(table.n_tools() * m);
    let mut buf = Vec::with_capacity(size);
    for (t, row) in table.scores.iter().enumerate() {
        for i in 0..m {
            let mut rng = rng_for(seed, &[hash_str("monte_carlo"), t as u64, i as u64]);
            buf.clear();
            buf.extend((0..size).map(|_| row[rng.gen_range(0..row.len())]));
            let f = compute_features15(&buf)?;
            features.push(cols.iter().map(|&c| f[c]).collect());
            labels.push(t);
        }
    }
    LabeledDataset::new(
        features,
        labels,
        cols.iter().map(|&c| FEATURE_NAMES[c].to_string()).collect(),
        table.tools.clone(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalerParams {
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s < 1e-12 { 0.0 } else { (x - m) / s })
            .collect()
    }

    pub fn transform(&self, ds: &LabeledDataset) -> LabeledDataset {
        LabeledDataset {
            features: ds.features.iter().map(|r| self.transform_row(r)).collect(),
            ..ds.clone()
        }
    }
}

pub fn fit_scaler(ds: &LabeledDataset) -> Result<ScalerParams> {
    if ds.len() < 2 {
        return Err(Error::DatasetTooSmall("scaling needs at least 2 samples".into()));
    }
    let n = ds.len() as f64;
    let d = ds.n_features();
    let mut mean = vec![0.0; d];
    for row in &ds.features {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for row in &ds.features {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(ScalerParams { mean, std })
}

/// Per-feature standardization with population std; near-constant
/// features become 0.
pub fn standard_scale(ds: &LabeledDataset) -> Result<(LabeledDataset, ScalerParams)> {
    let params = fit_scaler(ds)?;
    Ok((params.transform(ds), params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorers::ScoreMode;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn moments_small_examples() {
        let m = compute_moments(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(m.mean(), 0.0);
        assert!(close(m.var(), 2.0 / 3.0));
        assert!((m.std() - 0.816_497).abs() < 1e-6);
        assert_eq!((m.min(), m.max(), m.median()), (-1.0, 1.0, 0.0));

        let m = compute_moments(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.get("p25"), Some(0.75));
        assert_eq!(m.get("p50"), Some(1.5));
        assert_eq!(m.get("p75"), Some(2.25));
        assert!(compute_moments(&[]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(compute_entropy(&[0.3; 7], EntropyVariant::Hist), 0.0);
        assert_eq!(compute_entropy(&[0.3; 7], EntropyVariant::Value), 0.0);
        let one_per_bin: Vec<f64> = (0..10).map(|i| -0.9 + 0.2 * i as f64).collect();
        assert!(close(compute_entropy(&one_per_bin, EntropyVariant::Hist), 10f64.ln()));
        assert!(close(
            compute_entropy(&[1.0, 1.0, -1.0, -1.0], EntropyVariant::Value),
            2f64.ln()
        ));
        assert_eq!(compute_entropy(&[0.0, -0.0], EntropyVariant::Value), 0.0);
    }

    #[test]
    fn chunk_examples() {
        let c = sample_chunks(100, 100, 1, 4).unwrap();
        let mut idx = c[0].doc_indices.clone();
        idx.sort_unstable();
        assert_eq!(idx, (0..100).collect::<Vec<_>>());
        assert_eq!(sample_chunks(500, 20, 9, 1).unwrap(), sample_chunks(500, 20, 9, 1).unwrap());
        assert!(matches!(sample_chunks(10, 50, 1, 1), Err(Error::ChunkTooLarge { .. })));
        assert_eq!(default_chunk_count(10_000, 500, DEFAULT_OVERSAMPLE), 40);
    }

    #[test]
    fn chunk_is_prefix_stable() {
        let few = sample_chunks(300, 30, 3, 8).unwrap();
        let many = sample_chunks(300, 30, 10, 8).unwrap();
        assert_eq!(few[..], many[..3]);
    }

    fn table(rows: Vec<Vec<f64>>) -> ScoreTable {
        let n = rows[0].len();
        ScoreTable::new(
            (0..rows.len()).map(|i| format!("t{i}")).collect(),
            (0..n).map(|i| format!("d{i}")).collect(),
            ScoreMode::Text,
            rows,
        )
        .unwrap()
    }

    #[test]
    fn dataset_counts_and_identical_rows() {
        let row: Vec<f64> = (0..50).map(|i| (i as f64 / 25.0) - 1.0).collect();
        let t = table(vec![row.clone(), row.clone(), row.iter().map(|x| x * 0.5).collect(), row.iter().map(|x| -x).collect()]);
        let chunks = sample_chunks(50, 10, 10, 3).unwrap();
        let ds = build_dataset(&t, &chunks, Normalization::Raw, &["t0", "t1", "t2", "t3"]).unwrap();
        assert_eq!(ds.len(), 40);
        assert_eq!(ds.n_features(), 13);
        for k in 0..10 {
            assert_eq!(ds.features[4 * k], ds.features[4 * k + 1]);
        }
        assert!(matches!(
            build_dataset(&t, &chunks, Normalization::Raw, &["t0"]),
            Err(Error::TooFewTools { .. })
        ));
    }

    #[test]
    fn n1_on_binary_tool_hits_only_enumerated_multisets() {
        // Brute force: every multiset of size 3 over {-1, +1}.
        let mut allowed = Vec::new();
        for k in 0..=3 {
            let mut v = vec![1.0; k];
            v.extend(vec![-1.0; 3 - k]);
            allowed.push(compute_moments(&v).unwrap());
        }
        let mut rng = rng_for(1, &[]);
        let binary: Vec<f64> = (0..60).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let other: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = table(vec![binary, other]);
        let chunks = sample_chunks(60, 3, 30, 2).unwrap();
        let ds = build_dataset(&t, &chunks, Normalization::N1, &["t0", "t1"]).unwrap();
        for (f, l) in ds.features.iter().zip(&ds.labels) {
            if *l == 0 {
                assert!(allowed.iter().any(|m| m.0.as_slice() == f.as_slice()), "{f:?}");
            }
        }
    }

    #[test]
    fn monte_carlo_counts_and_projection() {
        let mut rng = rng_for(2, &[]);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..250).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let t = table(rows);
        let ds = monte_carlo_dataset(&t, 10, 15, 5).unwrap();
        assert_eq!(ds.len(), 30);
        assert_eq!(ds.feature_names, FEATURE_NAMES.map(String::from).to_vec());
        assert_eq!(ds, monte_carlo_dataset(&t, 10, 15, 5).unwrap());
        let small = monte_carlo_dataset(&t, 10, 4, 5).unwrap();
        let cols = feature_subset(4, 5).unwrap();
        for (a, b) in small.features.iter().zip(&ds.features) {
            let projected: Vec<f64> = cols.iter().map(|&c| b[c]).collect();
            assert_eq!(a, &projected);
        }
        assert!(matches!(monte_carlo_dataset(&t, 10, 0, 5), Err(Error::FeatureSubsetSize(0))));
        assert!(matches!(monte_carlo_dataset(&t, 10, 16, 5), Err(Error::FeatureSubsetSize(16))));
        assert_eq!(monte_carlo_sample_size(250), 3);
        assert_eq!(monte_carlo_sample_size(1), 1);
    }

    #[test]
    fn scaler_contract() {
        let ds = LabeledDataset::new(
            vec![vec![1.0, 5.0, 2.0], vec![2.0, 5.0, 4.0], vec![6.0, 5.0, 9.0], vec![0.5, 5.0, -3.0]],
            vec![0, 1, 0, 1],
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let (scaled, params) = standard_scale(&ds).unwrap();
        for c in 0..3 {
            let col: Vec<f64> = scaled.features.iter().map(|r| r[c]).collect();
            let m = col.iter().sum::<f64>() / 4.0;
            let s = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0).sqrt();
            assert!(m.abs() < 1e-9);
            assert!(s.abs() < 1e-9 || (s - 1.0).abs() < 1e-9);
        }
        assert!(scaled.features.iter().all(|r| r[1] == 0.0));
        assert_eq!(params.transform(&ds), scaled);
    }

    #[test]
    fn dataset_csv_round_trip() {
        let ds = LabeledDataset::new(
            vec![vec![0.1, -2.5e-7], vec![1.0 / 3.0, 0.0]],
            vec![1, 0],
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("label,f0,f1\n"));
        let back = LabeledDataset::read_csv(buf.as_slice(), ds.feature_names.clone(), ds.class_names.clone()).unwrap();
        assert_eq!(back, ds);
    }
}
