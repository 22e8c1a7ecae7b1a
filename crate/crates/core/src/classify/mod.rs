//! Classifiers trained on moment vectors, plus splitting and F1 metrics.
//!
//! All learners are written from scratch in double precision and are
//! deterministic for a fixed seed.

mod knn;
mod metrics;
mod mlp;
mod split;
mod svm;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::LabeledDataset;

pub use knn::{train_knn, Knn};
pub use metrics::{metrics_from_confusion, metrics_from_predictions, MetricsReport};
pub use mlp::{train_mlp, Mlp, MlpHyperparams, OptimizerKind};
pub use split::{split_dataset, split_sizes, Split};
pub use svm::{train_svm, Gamma, GammaName, KernelKind, Svm, SvmParams};
pub use tree::{export_tree_dot, gini, train_tree, DecisionTree, NodeSplit, TreeNode};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Mlp(Mlp),
    Knn(Knn),
    Svm(Svm),
    Tree(DecisionTree),
}

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::Mlp(m) => m.n_inputs,
            Model::Knn(m) => m.n_features(),
            Model::Svm(m) => m.n_features,
            Model::Tree(m) => m.n_features,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Model::Mlp(m) => m.predict(x),
            Model::Knn(m) => m.predict(x),
            Model::Svm(m) => m.predict(x),
            Model::Tree(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, ds: &LabeledDataset) -> Vec<usize> {
        ds.features.iter().map(|x| self.predict(x)).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Mlp(_) => "mlp",
            Model::Knn(_) => "knn",
            Model::Svm(_) => "svm",
            Model::Tree(_) => "tree",
        }
    }
}

pub fn evaluate(model: &Model, test: &LabeledDataset) -> Result<MetricsReport> {
    if model.n_features() != test.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: test.n_features(),
        });
    }
    let pred = model.predict_all(test);
    Ok(metrics_from_predictions(&test.labels, &pred, test.n_classes()))
}

/// Versioned on-disk form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, ds: &LabeledDataset) -> Self {
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            feature_names: ds.feature_names.clone(),
            class_names: ds.class_names.clone(),
            model,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion(file.version));
        }
        Ok(file)
    }
}

pub(crate) fn check_trainable(train: &LabeledDataset) -> Result<()> {
    train.validate()?;
    if train.is_empty() {
        return Err(Error::DatasetTooSmall("training set is empty".into()));
    }
    if train.n_classes() < 2 {
        return Err(Error::DatasetTooSmall("need at least 2 classes".into()));
    }
    Ok(())
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
