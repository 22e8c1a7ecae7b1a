//! Soft-margin SVM solved in the dual with sequential minimal optimization
//! (second-order working-set selection). Multiclass problems use one
//! machine per class against the rest.

use serde::{Deserialize, Serialize};

use super::{check_trainable, sq_dist};
use crate::error::{Error, Result};
use crate::features::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaName {
    Scale,
}

/// RBF width: `"scale"` means `1 / (n_features * var(X))` over all entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Named(GammaName),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub kernel: KernelKind,
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    /// Defaults to `max(10^7, 100 n)`.
    pub max_iter: Option<usize>,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            kernel: KernelKind::Rbf,
            c: 1.0,
            gamma: Gamma::Named(GammaName::Scale),
            tol: 1e-3,
            max_iter: None,
        }
    }
}

impl SvmParams {
    pub fn linear() -> Self {
        SvmParams {
            kernel: KernelKind::Linear,
            ..Default::default()
        }
    }

    pub fn rbf() -> Self {
        SvmParams::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => (-gamma * sq_dist(a, b)).exp(),
        }
    }
}

/// Decision function `sum_i coef_i K(sv_i, x) - rho`; positive means the
/// machine's positive class. Linear machines also keep the collapsed
/// weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub support_vectors: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub weights: Option<Vec<f64>>,
    pub iterations: usize,
}

impl BinaryMachine {
    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        match &self.weights {
            Some(w) => w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.rho,
            None => {
                self.support_vectors
                    .iter()
                    .zip(&self.coef)
                    .map(|(sv, c)| c * kernel.eval(sv, x))
                    .sum::<f64>()
                    - self.rho
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub kernel: Kernel,
    pub n_features: usize,
    pub n_classes: usize,
    /// Two classes: a single machine, class 0 positive. Otherwise one per
    /// class.
    pub machines: Vec<BinaryMachine>,
}

impl Svm {
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.machines.iter().map(|m| m.decision(&self.kernel, x)).collect()
    }

    /// Ties go to the lower class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let d = self.decision_values(x);
        if self.n_classes == 2 {
            return if d[0] >= 0.0 { 0 } else { 1 };
        }
        super::mlp::argmax(&d)
    }
}

fn resolve_gamma(gamma: Gamma, ds: &LabeledDataset) -> Result<f64> {
    match gamma {
        Gamma::Value(g) if g > 0.0 && g.is_finite() => Ok(g),
        Gamma::Value(g) => Err(Error::InvalidHyperparams(format!("gamma {g} must be positive"))),
        Gamma::Named(GammaName::Scale) => {
            let all: Vec<f64> = ds.features.iter().flatten().copied().collect();
            let n = all.len() as f64;
            let mean = all.iter().sum::<f64>() / n;
            let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            Ok(if var > 0.0 {
                1.0 / (ds.n_features() as f64 * var)
            } else {
                1.0
            })
        }
    }
}

pub fn train_svm(train: &LabeledDataset, params: &SvmParams) -> Result<Svm> {
    check_trainable(train)?;
    if !(params.c > 0.0 && params.tol > 0.0) {
        return Err(Error::InvalidHyperparams("c and tol must be positive".into()));
    }
    let kernel = match params.kernel {
        KernelKind::Linear => Kernel::Linear,
        KernelKind::Rbf => Kernel::Rbf {
            gamma: resolve_gamma(params.gamma, train)?,
        },
    };
    let n = train.len();
    let max_iter = params.max_iter.unwrap_or_else(|| (100 * n).max(10_000_000));
    let gram = Gram::new(&train.features, kernel);
    let k = train.n_classes();
    let positives: Vec<usize> = if k == 2 { vec![0] } else { (0..k).collect() };
    let machines = positives
        .iter()
        .map(|&c| {
            let y: Vec<f64> = train.labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            let sol = solve_dual(&gram, &y, params.c, params.tol, max_iter)?;
            Ok(build_machine(&train.features, &y, &sol, kernel))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Svm {
        kernel,
        n_features: train.n_features(),
        n_classes: k,
        machines,
    })
}

/// Kernel matrix, precomputed when it fits in a modest amount of memory,
/// otherwise evaluated row by row.
struct Gram<'a> {
    xs: &'a [Vec<f64>],
    kernel: Kernel,
    full: Option<Vec<f64>>,
    diag: Vec<f64>,
}

const FULL_GRAM_LIMIT: usize = 4000;

impl<'a> Gram<'a> {
    fn new(xs: &'a [Vec<f64>], kernel: Kernel) -> Self {
        let n = xs.len();
        let diag = xs.iter().map(|x| kernel.eval(x, x)).collect();
        let full = (n <= FULL_GRAM_LIMIT).then(|| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = kernel.eval(&xs[i], &xs[j]);
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            m
        });
        Gram { xs, kernel, full, diag }
    }

    fn row(&self, i: usize, out: &mut Vec<f64>) {
        let n = self.xs.len();
        out.clear();
        match &self.full {
            Some(m) => out.extend_from_slice(&m[i * n..(i + 1) * n]),
            None => out.extend(self.xs.iter().map(|x| self.kernel.eval(&self.xs[i], x))),
        }
    }
}

struct DualSolution {
    alpha: Vec<f64>,
    rho: f64,
    iterations: usize,
}

const TAU: f64 = 1e-12;

/// Minimizes `0.5 a'Qa - e'a` s.t. `0 <= a <= c`, `y'a = 0`, with
/// `Q_ij = y_i y_j K_ij`. Stops when the maximal KKT violation drops
/// below `tol`.
fn solve_dual(gram: &Gram, y: &[f64], c: f64, tol: f64, max_iter: usize) -> Result<DualSolution> {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut ki = Vec::with_capacity(n);
    let mut kj = Vec::with_capacity(n);
    let up = |a: f64, yt: f64| if yt > 0.0 { a < c } else { a > 0.0 };
    let low = |a: f64, yt: f64| if yt > 0.0 { a > 0.0 } else { a < c };

    let mut iter = 0;
    loop {
        // i maximizes -y_t G_t over the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let mut gmin_side = f64::NEG_INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            gram.row(i, &mut ki);
            let mut best_obj = f64::INFINITY;
            for t in 0..n {
                if !low(alpha[t], y[t]) {
                    continue;
                }
                let v = y[t] * grad[t];
                if v >= gmin_side {
                    gmin_side = v;
                }
                let diff = gmax + v;
                if diff > 0.0 {
                    let mut quad = gram.diag[i] + gram.diag[t] - 2.0 * ki[t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(diff * diff) / quad;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let violation = gmax + gmin_side;
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break };
        if violation < tol {
            break;
        }
        if iter >= max_iter {
            return Err(Error::NonConvergence {
                iterations: iter,
                tolerance: violation,
            });
        }
        iter += 1;

        gram.row(j, &mut kj);
        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let mut quad = gram.diag[i] + gram.diag[j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = gram.diag[i] + gram.diag[j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let dai = alpha[i] - ai_old;
        let daj = alpha[j] - aj_old;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
        }
    }

    // Offset from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    Ok(DualSolution {
        alpha,
        rho,
        iterations: iter,
    })
}

fn build_machine(xs: &[Vec<f64>], y: &[f64], sol: &DualSolution, kernel: Kernel) -> BinaryMachine {
    let mut support_vectors = Vec::new();
    let mut coef = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(xs[t].clone());
            coef.push(a * y[t]);
        }
    }
    let weights = matches!(kernel, Kernel::Linear).then(|| {
        let d = xs.first().map_or(0, Vec::len);
        let mut w = vec![0.0; d];
        for (sv, c) in support_vectors.iter().zip(&coef) {
            for (wi, xi) in w.iter_mut().zip(sv) {
                *wi += c * xi;
            }
        }
        w
    });
    let (support_vectors, coef) = if weights.is_some() {
        (Vec::new(), Vec::new())
    } else {
        (support_vectors, coef)
    };
    BinaryMachine {
        support_vectors,
        coef,
        rho: sol.rho,
        weights,
        iterations: sol.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use rand::Rng;

    fn ds(features: Vec<Vec<f64>>, labels: Vec<usize>, k: usize) -> LabeledDataset {
        let d = features[0].len();
        LabeledDataset::new(
            features,
            labels,
            (0..d).map(|i| format!("f{i}")).collect(),
            (0..k).map(|c| format!("c{c}")).collect(),
        )
        .unwrap()
    }

    fn train_acc(m: &Svm, d: &LabeledDataset) -> f64 {
        d.features.iter().zip(&d.labels).filter(|(x, y)| m.predict(x) == **y).count() as f64 / d.len() as f64
    }

    pub(crate) fn xor(n_per: usize, seed: u64) -> LabeledDataset {
        let mut rng = rng_for(seed, &[]);
        let mut f = Vec::new();
        let mut l = Vec::new();
        for (cx, cy, label) in [(-1.0, -1.0, 0), (1.0, 1.0, 0), (-1.0, 1.0, 1), (1.0, -1.0, 1)] {
            for _ in 0..n_per {
                f.push(vec![cx + rng.gen_range(-0.2..0.2), cy + rng.gen_range(-0.2..0.2)]);
                l.push(label);
            }
        }
        ds(f, l, 2)
    }

    #[test]
    fn xor_needs_rbf() {
        let d = xor(10, 1);
        let lin = train_svm(&d, &SvmParams::linear()).unwrap();
        let rbf = train_svm(&d, &SvmParams::rbf()).unwrap();
        assert!(train_acc(&lin, &d) <= 0.75);
        assert_eq!(train_acc(&rbf, &d), 1.0);
    }

    #[test]
    fn separable_linear() {
        let mut rng = rng_for(3, &[]);
        let mut f = Vec::new();
        let mut l = Vec::new();
        for _ in 0..60 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(-1.0..1.0);
            if (x + 2.0 * y).abs() < 0.2 {
                continue;
            }
            f.push(vec![x, y]);
            l.push(usize::from(x + 2.0 * y > 0.0));
        }
        let d = ds(f, l, 2);
        let m = train_svm(&d, &SvmParams { c: 100.0, ..SvmParams::linear() }).unwrap();
        assert_eq!(train_acc(&m, &d), 1.0);
    }

    #[test]
    fn duplicated_points_give_bisector() {
        let d = ds(
            vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![2.0, 4.0], vec![2.0, 4.0]],
            vec![0, 0, 1, 1],
            2,
        );
        let m = train_svm(&d, &SvmParams::linear()).unwrap();
        assert_eq!(m.predict(&[0.0, 0.0]), 0);
        assert_eq!(m.predict(&[2.0, 4.0]), 1);
        let mid = m.decision_values(&[1.0, 2.0])[0];
        assert!(mid.abs() < 1e-9, "{mid}");
        assert_eq!(m.predict(&[1.0, 2.0]), 0);
        // off the segment but on the bisector
        assert!(m.decision_values(&[3.0, 1.0])[0].abs() < 1e-9);
    }

    #[test]
    fn multiclass_one_vs_rest() {
        let mut f = Vec::new();
        let mut l = Vec::new();
        let mut rng = rng_for(5, &[]);
        for (c, (cx, cy)) in [(0.0, 3.0), (3.0, -2.0), (-3.0, -2.0)].iter().enumerate() {
            for _ in 0..15 {
                f.push(vec![cx + rng.gen_range(-0.5..0.5), cy + rng.gen_range(-0.5..0.5)]);
                l.push(c);
            }
        }
        let d = ds(f, l, 3);
        for p in [SvmParams::linear(), SvmParams::rbf()] {
            let m = train_svm(&d, &p).unwrap();
            assert_eq!(m.machines.len(), 3);
            assert_eq!(train_acc(&m, &d), 1.0);
        }
    }

    #[test]
    fn iteration_cap_reports_tolerance() {
        let d = xor(10, 2);
        let err = train_svm(&d, &SvmParams { max_iter: Some(1), ..SvmParams::rbf() }).unwrap_err();
        match err {
            Error::NonConvergence { iterations, tolerance } => {
                assert_eq!(iterations, 1);
                assert!(tolerance >= 1e-3);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn gamma_serde_forms() {
        let p: SvmParams = serde_json::from_str(r#"{"kernel":"rbf","gamma":"scale"}"#).unwrap();
        assert_eq!(p.gamma, Gamma::Named(GammaName::Scale));
        let p: SvmParams = serde_json::from_str(r#"{"kernel":"rbf","gamma":0.5}"#).unwrap();
        assert_eq!(p.gamma, Gamma::Value(0.5));
    }

    #[test]
    fn dual_solution_satisfies_kkt() {
        let d = xor(8, 7);
        let kernel = Kernel::Rbf { gamma: 0.5 };
        let gram = Gram::new(&d.features, kernel);
        let y: Vec<f64> = d.labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
        let sol = solve_dual(&gram, &y, 1.0, 1e-3, 1_000_000).unwrap();
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-9);
        assert!(sol.alpha.iter().all(|a| (0.0..=1.0).contains(a)));
    }
}
