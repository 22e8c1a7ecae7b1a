//! One-hidden-layer perceptron: input → hidden (ReLU) → softmax, trained
//! with mini-batch SGD or Adam on mean cross-entropy.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_trainable, metrics_from_predictions};
use crate::error::{Error, Result};
use crate::features::LabeledDataset;
use crate::rng::{hash_str, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHyperparams {
    pub hidden_size: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_batch() -> usize {
    32
}

impl Default for MlpHyperparams {
    fn default() -> Self {
        MlpHyperparams {
            hidden_size: 50,
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl MlpHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidHyperparams(m));
        if !(5..=300).contains(&self.hidden_size) {
            return bad(format!("hidden_size {} outside [5, 300]", self.hidden_size));
        }
        if !(0.001..=0.1).contains(&self.learning_rate) {
            return bad(format!("learning_rate {} outside [0.001, 0.1]", self.learning_rate));
        }
        if !(5..=100).contains(&self.epochs) {
            return bad(format!("epochs {} outside [5, 100]", self.epochs));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        Ok(())
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Parameters live in one flat vector: `w1` (hidden × inputs, row-major),
/// `b1`, `w2` (outputs × hidden), `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
    pub params: Vec<f64>,
    pub hyperparams: Option<MlpHyperparams>,
}

impl Mlp {
    pub fn n_params(n_inputs: usize, n_hidden: usize, n_outputs: usize) -> usize {
        n_hidden * n_inputs + n_hidden + n_outputs * n_hidden + n_outputs
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(n_inputs: usize, n_hidden: usize, n_outputs: usize, seed: u64) -> Mlp {
        let mut rng = rng_for(seed, &[hash_str("mlp_init")]);
        let mut params = vec![0.0; Self::n_params(n_inputs, n_hidden, n_outputs)];
        let l1 = (6.0 / (n_inputs + n_hidden) as f64).sqrt();
        let l2 = (6.0 / (n_hidden + n_outputs) as f64).sqrt();
        let (w1, rest) = params.split_at_mut(n_hidden * n_inputs);
        w1.iter_mut().for_each(|w| *w = rng.gen_range(-l1..=l1));
        let (_, rest) = rest.split_at_mut(n_hidden);
        let (w2, _) = rest.split_at_mut(n_outputs * n_hidden);
        w2.iter_mut().for_each(|w| *w = rng.gen_range(-l2..=l2));
        Mlp {
            n_inputs,
            n_hidden,
            n_outputs,
            params,
            hyperparams: None,
        }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.n_hidden * self.n_inputs;
        let w2 = b1 + self.n_hidden;
        let b2 = w2 + self.n_outputs * self.n_hidden;
        (b1, w2, b2)
    }

    /// Returns (pre-activation hidden, logits).
    fn forward(&self, x: &[f64], hidden: &mut [f64], logits: &mut [f64]) {
        let (ob1, ow2, ob2) = self.offsets();
        let p = &self.params;
        for h in 0..self.n_hidden {
            let row = &p[h * self.n_inputs..(h + 1) * self.n_inputs];
            hidden[h] = p[ob1 + h] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
        for o in 0..self.n_outputs {
            let row = &p[ow2 + o * self.n_hidden..ow2 + (o + 1) * self.n_hidden];
            logits[o] = p[ob2 + o]
                + row
                    .iter()
                    .zip(hidden.iter())
                    .map(|(w, h)| w * h.max(0.0))
                    .sum::<f64>();
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut hidden = vec![0.0; self.n_hidden];
        let mut logits = vec![0.0; self.n_outputs];
        self.forward(x, &mut hidden, &mut logits);
        softmax_in_place(&mut logits);
        logits
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut hidden = vec![0.0; self.n_hidden];
        let mut logits = vec![0.0; self.n_outputs];
        self.forward(x, &mut hidden, &mut logits);
        argmax(&logits)
    }

    /// Mean cross-entropy over the batch; writes its gradient into `grad`.
    #[allow(clippy::needless_range_loop)]
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[usize], grad: &mut [f64]) -> f64 {
        assert_eq!(grad.len(), self.params.len());
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (ob1, ow2, ob2) = self.offsets();
        let mut hidden = vec![0.0; self.n_hidden];
        let mut logits = vec![0.0; self.n_outputs];
        let mut dhidden = vec![0.0; self.n_hidden];
        let inv = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            self.forward(x, &mut hidden, &mut logits);
            let lse = log_sum_exp(&logits);
            loss += lse - logits[y];
            // dz = softmax - onehot
            for o in 0..self.n_outputs {
                let dz = ((logits[o] - lse).exp() - f64::from(u8::from(o == y))) * inv;
                logits[o] = dz;
                grad[ob2 + o] += dz;
            }
            dhidden.iter_mut().for_each(|d| *d = 0.0);
            for o in 0..self.n_outputs {
                let dz = logits[o];
                let base = ow2 + o * self.n_hidden;
                for h in 0..self.n_hidden {
                    grad[base + h] += dz * hidden[h].max(0.0);
                    dhidden[h] += dz * self.params[base + h];
                }
            }
            for h in 0..self.n_hidden {
                if hidden[h] <= 0.0 {
                    continue;
                }
                let d = dhidden[h];
                grad[ob1 + h] += d;
                let row = &mut grad[h * self.n_inputs..(h + 1) * self.n_inputs];
                for (g, xi) in row.iter_mut().zip(x.iter()) {
                    *g += d * xi;
                }
            }
        }
        loss * inv
    }

    pub fn loss(&self, xs: &[&[f64]], ys: &[usize]) -> f64 {
        let mut hidden = vec![0.0; self.n_hidden];
        let mut logits = vec![0.0; self.n_outputs];
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| {
                self.forward(x, &mut hidden, &mut logits);
                log_sum_exp(&logits) - logits[y]
            })
            .sum();
        total / xs.len() as f64
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax_in_place(v: &mut [f64]) {
    let lse = log_sum_exp(v);
    v.iter_mut().for_each(|x| *x = (*x - lse).exp());
}

/// First index of the maximum.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl Optimizer {
    fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= *lr * g;
                }
            }
            Optimizer::Adam { lr, m, v, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                for i in 0..params.len() {
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * grad[i];
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
                    params[i] -= *lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

fn macro_f1(model: &Mlp, ds: &LabeledDataset) -> f64 {
    let pred: Vec<usize> = ds.features.iter().map(|x| model.predict(x)).collect();
    metrics_from_predictions(&ds.labels, &pred, ds.n_classes()).macro_f1
}

/// Trains for `hp.epochs` epochs and returns the epoch snapshot with the
/// best dev macro-F1 (earliest wins ties). An empty dev set falls back to
/// the training set for selection.
pub fn train_mlp(train: &LabeledDataset, dev: &LabeledDataset, hp: &MlpHyperparams) -> Result<Mlp> {
    hp.validate()?;
    check_trainable(train)?;
    if dev.n_features() != train.n_features() {
        return Err(Error::DimensionMismatch {
            expected: train.n_features(),
            got: dev.n_features(),
        });
    }
    let selection = if dev.is_empty() { train } else { dev };
    let mut model = Mlp::init(train.n_features(), hp.hidden_size, train.n_classes(), hp.seed);
    model.hyperparams = Some(hp.clone());
    let mut opt = Optimizer::new(hp.optimizer, hp.learning_rate, model.params.len());
    let mut grad = vec![0.0; model.params.len()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 1..=hp.epochs {
        order.shuffle(&mut rng_for(hp.seed, &[hash_str("mlp_epoch"), epoch as u64]));
        for batch in order.chunks(hp.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| train.features[i].as_slice()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| train.labels[i]).collect();
            let loss = model.loss_and_grad(&xs, &ys, &mut grad);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingDiverged { epoch });
            }
            opt.step(&mut model.params, &grad);
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
        let score = macro_f1(&model, selection);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, model.params.clone()));
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::standard_normal;

    pub(crate) fn gaussian_blobs(n_per: usize, centers: &[f64], dim: usize, seed: u64) -> LabeledDataset {
        let mut rng = rng_for(seed, &[]);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..n_per {
                features.push((0..dim).map(|_| center + standard_normal(&mut rng)).collect());
                labels.push(c);
            }
        }
        LabeledDataset::new(
            features,
            labels,
            (0..dim).map(|i| format!("f{i}")).collect(),
            (0..centers.len()).map(|c| format!("c{c}")).collect(),
        )
        .unwrap()
    }

    /// Central differences, independent of the backward pass.
    fn numeric_grad(model: &Mlp, xs: &[&[f64]], ys: &[usize], eps: f64) -> Vec<f64> {
        let mut m = model.clone();
        (0..m.params.len())
            .map(|i| {
                let orig = m.params[i];
                m.params[i] = orig + eps;
                let up = m.loss(xs, ys);
                m.params[i] = orig - eps;
                let down = m.loss(xs, ys);
                m.params[i] = orig;
                (up - down) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = gaussian_blobs(3, &[-1.0, 0.0, 1.0], 4, 2);
        let model = Mlp::init(4, 7, 3, 9);
        let idx = [0usize, 2, 4, 6, 8];
        let xs: Vec<&[f64]> = idx.iter().map(|&i| ds.features[i].as_slice()).collect();
        let ys: Vec<usize> = idx.iter().map(|&i| ds.labels[i]).collect();
        let mut grad = vec![0.0; model.params.len()];
        let loss = model.loss_and_grad(&xs, &ys, &mut grad);
        assert!((loss - model.loss(&xs, &ys)).abs() < 1e-12);
        let num = numeric_grad(&model, &xs, &ys, 1e-5);
        for (a, n) in grad.iter().zip(&num) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            assert!(rel < 1e-4, "{a} vs {n}");
        }
    }

    #[test]
    fn separable_blobs_reach_full_train_accuracy() {
        let ds = gaussian_blobs(40, &[-5.0, 5.0], 3, 4);
        let hp = MlpHyperparams {
            hidden_size: 10,
            epochs: 20,
            ..Default::default()
        };
        let model = train_mlp(&ds, &ds, &hp).unwrap();
        let acc = ds.features.iter().zip(&ds.labels).filter(|(x, y)| model.predict(x) == **y).count();
        assert_eq!(acc, ds.len());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = gaussian_blobs(20, &[-1.0, 1.0], 2, 4);
        let hp = MlpHyperparams {
            hidden_size: 8,
            epochs: 5,
            seed: 3,
            ..Default::default()
        };
        assert_eq!(train_mlp(&ds, &ds, &hp).unwrap(), train_mlp(&ds, &ds, &hp).unwrap());
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let mut ds = gaussian_blobs(10, &[-1.0, 1.0], 2, 4);
        ds.features[3][0] = f64::INFINITY;
        let hp = MlpHyperparams {
            hidden_size: 5,
            epochs: 5,
            ..Default::default()
        };
        let err = train_mlp(&ds, &ds, &hp).unwrap_err();
        assert!(matches!(err, Error::TrainingDiverged { epoch: 1 }), "{err}");
    }

    #[test]
    fn hyperparams_are_range_checked() {
        for hp in [
            MlpHyperparams { hidden_size: 4, ..Default::default() },
            MlpHyperparams { learning_rate: 0.5, ..Default::default() },
            MlpHyperparams { epochs: 101, ..Default::default() },
        ] {
            assert!(hp.validate().is_err());
        }
    }

    #[test]
    fn first_epoch_sgd_loss_does_not_increase() {
        // Full-batch steps with a small rate on a fixed smoke dataset.
        let ds = gaussian_blobs(16, &[-1.0, 1.0], 3, 8);
        let mut model = Mlp::init(3, 12, 2, 1);
        let xs: Vec<&[f64]> = ds.features.iter().map(Vec::as_slice).collect();
        let mut grad = vec![0.0; model.params.len()];
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.001, model.params.len());
        let mut prev = f64::INFINITY;
        for _ in 0..ds.len().div_ceil(32) + 5 {
            let loss = model.loss_and_grad(&xs, &ds.labels, &mut grad);
            assert!(loss <= prev + 1e-12);
            prev = loss;
            opt.step(&mut model.params, &grad);
        }
    }
}
