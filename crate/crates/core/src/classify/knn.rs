use serde::{Deserialize, Serialize};

use super::{check_trainable, sq_dist};
use crate::error::{Error, Result};
use crate::features::LabeledDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub n_classes: usize,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Knn {
    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Majority label of the `k` nearest points. Distance ties go to the
    /// lower sample index; vote ties go to the tied label whose member is
    /// nearest.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut nearest: Vec<(f64, usize)> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| (sq_dist(f, x), i))
            .collect();
        let k = self.k.min(nearest.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < nearest.len() {
            nearest.select_nth_unstable_by(k - 1, cmp);
            nearest.truncate(k);
        }
        nearest.sort_by(cmp);
        let mut votes = vec![0usize; self.n_classes];
        for &(_, i) in &nearest {
            votes[self.labels[i]] += 1;
        }
        let top = votes.iter().copied().max().unwrap_or(0);
        nearest
            .iter()
            .map(|&(_, i)| self.labels[i])
            .find(|&l| votes[l] == top)
            .unwrap_or(0)
    }
}

pub fn train_knn(train: &LabeledDataset, k: usize) -> Result<Knn> {
    check_trainable(train)?;
    if k == 0 || k > train.len() {
        return Err(Error::InvalidHyperparams(format!(
            "k = {k} must lie in [1, {}]",
            train.len()
        )));
    }
    Ok(Knn {
        k,
        n_classes: train.n_classes(),
        features: train.features.clone(),
        labels: train.labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(points: &[(f64, usize)]) -> LabeledDataset {
        LabeledDataset::new(
            points.iter().map(|p| vec![p.0]).collect(),
            points.iter().map(|p| p.1).collect(),
            vec!["x".into()],
            vec!["A".into(), "B".into()],
        )
        .unwrap()
    }

    #[test]
    fn geometry_example() {
        let ds = one_d(&[(0.0, 0), (1.0, 0), (10.0, 1), (11.0, 1), (12.0, 1)]);
        let m = train_knn(&ds, 5).unwrap();
        assert_eq!(m.predict(&[5.4]), 1);
        assert_eq!(m.predict(&[-100.0]), 1);
        let m1 = train_knn(&ds, 1).unwrap();
        for (x, y) in ds.features.iter().zip(&ds.labels) {
            assert_eq!(m1.predict(x), *y);
        }
        assert!(train_knn(&ds, 6).is_err());
    }

    #[test]
    fn vote_tie_goes_to_nearest() {
        let ds = one_d(&[(0.0, 0), (3.0, 1), (10.0, 0), (11.0, 1)]);
        let m = train_knn(&ds, 2).unwrap();
        assert_eq!(m.predict(&[2.0]), 1);
        assert_eq!(m.predict(&[1.0]), 0);
        // equidistant neighbours: lower index first
        let m = train_knn(&ds, 1).unwrap();
        assert_eq!(m.predict(&[1.5]), 0);
    }
}
