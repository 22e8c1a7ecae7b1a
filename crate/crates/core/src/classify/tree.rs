//! CART classification tree with Gini impurity and Graphviz export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::check_trainable;
use crate::error::Result;
use crate::features::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSplit {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// `None` for leaves. Samples with `x[feature] <= threshold` go left.
    pub split: Option<NodeSplit>,
    pub gini: f64,
    pub n_samples: usize,
    pub class_counts: Vec<usize>,
    pub prediction: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub n_classes: usize,
    pub max_depth: usize,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = &self.nodes[0];
        while let Some(s) = node.split {
            node = &self.nodes[if x[s.feature] <= s.threshold { s.left } else { s.right }];
        }
        node.prediction
    }

    /// Depth of the deepest leaf.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &k) in counts.iter().enumerate() {
        if k > counts[best] {
            best = c;
        }
    }
    best
}

pub fn train_tree(train: &LabeledDataset, max_depth: usize) -> Result<DecisionTree> {
    check_trainable(train)?;
    let mut tree = DecisionTree {
        nodes: Vec::new(),
        n_features: train.n_features(),
        n_classes: train.n_classes(),
        max_depth,
    };
    let all: Vec<usize> = (0..train.len()).collect();
    grow(&mut tree, train, all, 0);
    Ok(tree)
}

fn grow(tree: &mut DecisionTree, ds: &LabeledDataset, idx: Vec<usize>, depth: usize) -> usize {
    let mut counts = vec![0usize; tree.n_classes];
    for &i in &idx {
        counts[ds.labels[i]] += 1;
    }
    let id = tree.nodes.len();
    let impurity = gini(&counts);
    tree.nodes.push(TreeNode {
        split: None,
        gini: impurity,
        n_samples: idx.len(),
        prediction: majority(&counts),
        class_counts: counts.clone(),
        depth,
    });
    if depth >= tree.max_depth || idx.len() < 2 || impurity == 0.0 {
        return id;
    }
    let Some((feature, threshold)) = best_split(ds, &idx, &counts) else {
        return id;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| ds.features[i][feature] <= threshold);
    let l = grow(tree, ds, left, depth + 1);
    let r = grow(tree, ds, right, depth + 1);
    tree.nodes[id].split = Some(NodeSplit {
        feature,
        threshold,
        left: l,
        right: r,
    });
    id
}

/// Minimizes weighted child Gini over midpoints between consecutive
/// distinct values. Ties keep the lower feature, then the lower threshold.
fn best_split(ds: &LabeledDataset, idx: &[usize], counts: &[usize]) -> Option<(usize, f64)> {
    let n = idx.len();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    for f in 0..ds.n_features() {
        order.sort_by(|&a, &b| ds.features[a][f].total_cmp(&ds.features[b][f]));
        let mut left = vec![0usize; counts.len()];
        for pos in 0..n - 1 {
            left[ds.labels[order[pos]]] += 1;
            let lo = ds.features[order[pos]][f];
            let hi = ds.features[order[pos + 1]][f];
            if lo == hi {
                continue;
            }
            let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
            let nl = (pos + 1) as f64;
            let nr = (n - pos - 1) as f64;
            let score = (nl * gini(&left) + nr * gini(&right)) / n as f64;
            let mut thr = lo + (hi - lo) / 2.0;
            if !(thr >= lo && thr < hi) {
                thr = lo;
            }
            if best.is_none_or(|(b, _, _)| score < b - 1e-12) {
                best = Some((score, f, thr));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph. Each node lists the split (internal nodes only), its
/// Gini impurity, sample count, per-class counts and majority class.
pub fn export_tree_dot(tree: &DecisionTree, feature_names: &[String], class_names: &[String]) -> String {
    let mut out = String::from("digraph Tree {\nnode [shape=box, fontname=\"helvetica\"] ;\nedge [fontname=\"helvetica\"] ;\n");
    let fname = |f: usize| feature_names.get(f).cloned().unwrap_or_else(|| format!("f{f}"));
    let cname = |c: usize| class_names.get(c).cloned().unwrap_or_else(|| format!("class {c}"));
    for (id, node) in tree.nodes.iter().enumerate() {
        let mut label = String::new();
        if let Some(s) = node.split {
            let _ = write!(label, "{} <= {:.3}\\n", escape(&fname(s.feature)), s.threshold);
        }
        let values: Vec<String> = node.class_counts.iter().map(usize::to_string).collect();
        let _ = write!(
            label,
            "gini = {:.3}\\nsamples = {}\\nvalue = [{}]\\nclass = {}",
            node.gini,
            node.n_samples,
            values.join(", "),
            escape(&cname(node.prediction))
        );
        let _ = writeln!(out, "{id} [label=\"{label}\"] ;");
    }
    for (id, node) in tree.nodes.iter().enumerate() {
        if let Some(s) = node.split {
            if id == 0 {
                let _ = writeln!(out, "{id} -> {} [labeldistance=2.5, labelangle=45, headlabel=\"True\"] ;", s.left);
                let _ = writeln!(out, "{id} -> {} [labeldistance=2.5, labelangle=-45, headlabel=\"False\"] ;", s.right);
            } else {
                let _ = writeln!(out, "{id} -> {} ;", s.left);
                let _ = writeln!(out, "{id} -> {} ;", s.right);
            }
        }
    }
    out.push_str("}\n");
    out
}
