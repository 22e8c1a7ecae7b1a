use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::LabeledDataset;
use crate::rng::{hash_str, rng_for};

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: LabeledDataset,
    pub dev: LabeledDataset,
    pub test: LabeledDataset,
}

/// Train/dev/test sizes: floor(70%), floor(15%), remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 70 / 100;
    let dev = n * 15 / 100;
    (train, dev, n - train - dev)
}

/// Stratified 70/15/15 split. Class quotas are apportioned so the global
/// part sizes are exactly [`split_sizes`] and every class with support of
/// 7 or more lands in all three parts.
pub fn split_dataset(ds: &LabeledDataset, seed: u64) -> Result<Split> {
    ds.validate()?;
    let n = ds.len();
    if n < 10 {
        return Err(Error::DatasetTooSmall(format!("{n} samples, need at least 10")));
    }
    let counts = ds.class_counts();
    for (c, &s) in counts.iter().enumerate() {
        if s > 0 && s < 3 {
            return Err(Error::ClassTooSmall {
                class: ds.class_names[c].clone(),
                support: s,
            });
        }
    }
    let targets = {
        let (a, b, c) = split_sizes(n);
        [a, b, c]
    };
    let quotas = apportion(&counts, targets);

    let mut parts: [Vec<usize>; 3] = Default::default();
    for (c, quota) in quotas.iter().enumerate() {
        let mut members: Vec<usize> = (0..n).filter(|&i| ds.labels[i] == c).collect();
        members.shuffle(&mut rng_for(seed, &[hash_str("split"), c as u64]));
        let mut it = members.into_iter();
        for (p, &q) in quota.iter().enumerate() {
            parts[p].extend(it.by_ref().take(q));
        }
    }
    for (p, part) in parts.iter_mut().enumerate() {
        part.shuffle(&mut rng_for(seed, &[hash_str("split_part"), p as u64]));
    }
    Ok(Split {
        train: ds.subset(&parts[0]),
        dev: ds.subset(&parts[1]),
        test: ds.subset(&parts[2]),
    })
}

/// Rounds the class-by-part quota matrix so rows sum to class supports and
/// columns to the part targets.
fn apportion(counts: &[usize], targets: [usize; 3]) -> Vec<[usize; 3]> {
    let n: usize = counts.iter().sum();
    let mut quotas: Vec<[usize; 3]> = Vec::with_capacity(counts.len());
    let mut fracs: Vec<[f64; 3]> = Vec::with_capacity(counts.len());
    let mut remaining = targets;
    for &s in counts {
        let mut q = [0usize; 3];
        let mut f = [0.0; 3];
        for p in 0..3 {
            let ideal = s as f64 * targets[p] as f64 / n as f64;
            q[p] = ideal.floor() as usize;
            f[p] = ideal - q[p] as f64;
            remaining[p] -= q[p];
        }
        quotas.push(q);
        fracs.push(f);
    }
    // Hand out each class's leftover units to parts with spare capacity,
    // largest fractional part first.
    for c in 0..counts.len() {
        let mut left = counts[c] - quotas[c].iter().sum::<usize>();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| fracs[c][b].total_cmp(&fracs[c][a]).then(a.cmp(&b)));
        while left > 0 {
            let p = order
                .iter()
                .copied()
                .find(|&p| remaining[p] > 0)
                .expect("part capacities add up to class leftovers");
            quotas[c][p] += 1;
            remaining[p] -= 1;
            fracs[c][p] = -1.0;
            order.sort_by(|&a, &b| fracs[c][b].total_cmp(&fracs[c][a]).then(a.cmp(&b)));
            left -= 1;
        }
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(labels: Vec<usize>, k: usize) -> LabeledDataset {
        LabeledDataset::new(
            labels.iter().enumerate().map(|(i, _)| vec![i as f64]).collect(),
            labels,
            vec!["x".into()],
            (0..k).map(|c| format!("c{c}")).collect(),
        )
        .unwrap()
    }

    fn sizes(s: &Split) -> (usize, usize, usize) {
        (s.train.len(), s.dev.len(), s.test.len())
    }

    #[test]
    fn sizes_follow_rounding_rule() {
        let d = ds((0..100).map(|i| i % 4).collect(), 4);
        assert_eq!(sizes(&split_dataset(&d, 1).unwrap()), (70, 15, 15));
        let d = ds((0..101).map(|i| i % 4).collect(), 4);
        assert_eq!(sizes(&split_dataset(&d, 1).unwrap()), (70, 15, 16));
    }

    #[test]
    fn deterministic_disjoint_and_complete() {
        let d = ds((0..97).map(|i| i % 3).collect(), 3);
        let a = split_dataset(&d, 5).unwrap();
        assert_eq!(a, split_dataset(&d, 5).unwrap());
        let mut all: Vec<usize> = [&a.train, &a.dev, &a.test]
            .iter()
            .flat_map(|p| p.features.iter().map(|r| r[0] as usize))
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..97).collect::<Vec<_>>());
    }

    #[test]
    fn stratified_when_support_allows() {
        let mut labels = vec![0; 7];
        labels.extend(vec![1; 50]);
        let d = ds(labels, 2);
        let s = split_dataset(&d, 3).unwrap();
        for part in [&s.train, &s.dev, &s.test] {
            assert!(part.labels.contains(&0));
            assert!(part.labels.contains(&1));
        }
    }

    #[test]
    fn rejects_tiny_classes() {
        let mut labels = vec![0; 20];
        labels.extend([1, 1]);
        let err = split_dataset(&ds(labels, 2), 1).unwrap_err();
        assert!(err.to_string().contains("c1"), "{err}");
        assert!(split_dataset(&ds(vec![0, 1, 0, 1, 0, 1], 2), 1).is_err());
    }
}
