//! Labelled datasets, synthetic blobs and budget distributions.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid_arg, Error, Result};
use crate::math;
use crate::UserId;

/// `n` examples with `dim` features each, stored row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    users: Vec<UserId>,
    dim: usize,
    classes: usize,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        users: Vec<UserId>,
        dim: usize,
        classes: usize,
    ) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(invalid_arg!("dimension and class count must be positive"));
        }
        if features.len() != labels.len() * dim || users.len() != labels.len() {
            return Err(invalid_arg!(
                "{} labels, {} users and {} feature values do not fit dimension {dim}",
                labels.len(),
                users.len(),
                features.len()
            ));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= classes) {
            return Err(invalid_arg!("label {l} outside 0..{classes}"));
        }
        let mut ids = users.clone();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid_arg!("user ids must be unique"));
        }
        Ok(Self {
            features,
            labels,
            users,
            dim,
            classes,
        })
    }

    /// User ids are the example indices.
    pub fn with_index_users(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        let users = (0..labels.len() as UserId).collect();
        Self::new(features, labels, users, dim, classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn example(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(invalid_arg!("index {i} out of range for {} examples", self.len()));
        }
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.example(i));
        }
        Self::new(
            features,
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.users[i]).collect(),
            self.dim,
            self.classes,
        )
    }

    /// First `n` rows and the rest.
    pub fn split(&self, n: usize) -> Result<(Self, Self)> {
        if n > self.len() {
            return Err(invalid_arg!("cannot split {} examples at {n}", self.len()));
        }
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        Ok((self.subset(&head)?, self.subset(&tail)?))
    }

    pub fn shuffled<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(rng);
        self.subset(&order).expect("permutation indices are in range")
    }
}

/// Group-size curve `c1·e^{kε} + c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpsilonShape {
    pub k: f64,
    pub c1: f64,
    pub c2: f64,
}

impl EpsilonShape {
    /// Published constants for `k = ±0.2`; any other `k` uses `e^{kε}`.
    pub fn for_skew(k: f64) -> Self {
        if k == -0.2 {
            Self { k, c1: 2.098, c2: -1.715 }
        } else if k == 0.2 {
            Self { k, c1: 1.554, c2: -1.715 }
        } else {
            Self { k, c1: 1.0, c2: 0.0 }
        }
    }

    pub fn weight(&self, epsilon: f64) -> f64 {
        self.c1 * math::exp(self.k * epsilon) + self.c2
    }
}

/// `n_groups` evenly spaced budgets on `[lo, hi]`.
pub fn group_levels(lo: f64, hi: f64, n_groups: usize) -> Result<Vec<f64>> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || lo < 0.0 {
        return Err(invalid_arg!("need 0 <= lo < hi, got [{lo}, {hi}]"));
    }
    if n_groups < 2 {
        return Err(invalid_arg!("need at least 2 groups"));
    }
    let step = (hi - lo) / (n_groups - 1) as f64;
    Ok((0..n_groups)
        .map(|g| if g + 1 == n_groups { hi } else { lo + step * g as f64 })
        .collect())
}

/// Users per group, proportional to the shape and summing to `n`.
/// Remainders are handed out largest first, lower group first on ties.
pub fn group_counts(n: usize, shape: EpsilonShape, lo: f64, hi: f64, n_groups: usize) -> Result<Vec<usize>> {
    let levels = group_levels(lo, hi, n_groups)?;
    let weights: Vec<f64> = levels.iter().map(|&e| shape.weight(e)).collect();
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "shape {shape:?} gives group weight {w} on [{lo}, {hi}]"
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "shape {shape:?} gives zero total weight on [{lo}, {hi}]"
        )));
    }
    let quotas: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| math::floor(*q) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..n_groups).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().take(n.saturating_sub(assigned)) {
        counts[g] += 1;
    }
    Ok(counts)
}

/// Budgets for `n` users, grouped and sorted ascending.
pub fn generate_epsilons(n: usize, shape: EpsilonShape, lo: f64, hi: f64, n_groups: usize) -> Result<Vec<f64>> {
    let levels = group_levels(lo, hi, n_groups)?;
    let counts = group_counts(n, shape, lo, hi, n_groups)?;
    let mut out = Vec::with_capacity(n);
    for (e, c) in levels.iter().zip(counts) {
        out.extend(core::iter::repeat_n(*e, c));
    }
    Ok(out)
}

/// Gaussian blobs with unit noise, one per class, centres `separation`
/// apart; features are min-max scaled to `[0, 1]`.
pub fn synthetic_dataset(n: usize, dim: usize, classes: usize, separation: f64, seed: u64) -> Result<LabeledDataset> {
    if classes < 2 || n < classes || dim == 0 {
        return Err(invalid_arg!("need classes >= 2, n >= classes and dim >= 1"));
    }
    if !(separation >= 0.0) || !separation.is_finite() {
        return Err(invalid_arg!("separation must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = separation / core::f64::consts::SQRT_2;
    let mut centres = vec![0.0; classes * dim];
    for c in 0..classes {
        let centre = &mut centres[c * dim..(c + 1) * dim];
        if classes <= dim {
            centre[c] = radius;
        } else {
            for v in centre.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let norm = math::sqrt(centre.iter().map(|v| v * v).sum());
            for v in centre.iter_mut() {
                *v *= radius / norm;
            }
        }
    }
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    labels.shuffle(&mut rng);
    let mut features = vec![0.0; n * dim];
    for (i, &y) in labels.iter().enumerate() {
        for j in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            features[i * dim + j] = centres[y * dim + j] + z;
        }
    }
    for j in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            lo = lo.min(features[i * dim + j]);
            hi = hi.max(features[i * dim + j]);
        }
        let span = hi - lo;
        for i in 0..n {
            let v = &mut features[i * dim + j];
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
    }
    LabeledDataset::with_index_users(features, labels, dim, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_skew_gives_equal_groups() {
        let c = group_counts(20_000, EpsilonShape::for_skew(0.0), 0.5, 1.0, 20).unwrap();
        assert!(c.iter().all(|&v| v == 1000));
        let e = generate_epsilons(20, EpsilonShape::for_skew(0.0), 0.5, 1.0, 20).unwrap();
        let levels = group_levels(0.5, 1.0, 20).unwrap();
        assert_eq!(e, levels);
        assert_eq!(e[19], 1.0);
    }

    #[test]
    fn published_constants() {
        assert_eq!(EpsilonShape::for_skew(-0.2), EpsilonShape { k: -0.2, c1: 2.098, c2: -1.715 });
        assert_eq!(EpsilonShape::for_skew(0.2), EpsilonShape { k: 0.2, c1: 1.554, c2: -1.715 });
        let neg = group_counts(5000, EpsilonShape::for_skew(-0.2), 0.5, 1.0, 20).unwrap();
        let pos = group_counts(5000, EpsilonShape::for_skew(0.2), 0.5, 1.0, 20).unwrap();
        assert_eq!(neg.iter().sum::<usize>(), 5000);
        assert!(neg[0] > neg[19] && pos[19] > pos[0]);
        // the unnormalized fractions do not sum to one
        let raw: f64 = group_levels(0.5, 1.0, 20)
            .unwrap()
            .iter()
            .map(|&e| EpsilonShape::for_skew(-0.2).weight(e))
            .sum();
        assert!((raw - 1.0).abs() > 0.5);
    }

    #[test]
    fn negative_counts_rejected() {
        let r = group_counts(100, EpsilonShape::for_skew(-0.2), 0.5, 2.0, 20);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
        assert!(generate_epsilons(10, EpsilonShape::for_skew(0.0), 1.0, 1.0, 20).is_err());
        assert!(generate_epsilons(10, EpsilonShape::for_skew(0.0), 0.5, 1.0, 1).is_err());
    }

    #[test]
    fn dataset_validation_and_subsets() {
        let d = LabeledDataset::with_index_users(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![0, 1, 0], 2, 2).unwrap();
        assert_eq!(d.example(1), &[2.0, 3.0]);
        let s = d.subset(&[2, 0]).unwrap();
        assert_eq!(s.features(), &[4.0, 5.0, 0.0, 1.0]);
        assert_eq!(s.users(), &[2, 0]);
        let (a, b) = d.split(1).unwrap();
        assert_eq!((a.len(), b.len()), (1, 2));
        assert!(d.subset(&[3]).is_err());
        assert!(LabeledDataset::with_index_users(vec![0.0; 4], vec![0, 2], 2, 2).is_err());
        assert!(LabeledDataset::new(vec![0.0; 4], vec![0, 1], vec![7, 7], 2, 2).is_err());
    }

    #[test]
    fn synthetic_is_seeded_and_scaled() {
        let a = synthetic_dataset(300, 4, 3, 2.0, 11).unwrap();
        let b = synthetic_dataset(300, 4, 3, 2.0, 11).unwrap();
        let c = synthetic_dataset(300, 4, 3, 2.0, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.features().iter().all(|v| (0.0..=1.0).contains(v)));
        let wide = synthetic_dataset(50, 2, 5, 3.0, 1).unwrap();
        assert_eq!(wide.classes(), 5);
    }

    /// Exhaustive largest-remainder recomputation with integer bookkeeping.
    fn reference_counts(n: usize, w: &[f64]) -> Vec<usize> {
        let total: f64 = w.iter().sum();
        let q: Vec<f64> = w.iter().map(|x| n as f64 * x / total).collect();
        let mut c: Vec<usize> = q.iter().map(|x| x.floor() as usize).collect();
        while c.iter().sum::<usize>() < n {
            let mut best = 0;
            let mut best_r = f64::NEG_INFINITY;
            for i in 0..w.len() {
                let r = q[i] - q[i].floor();
                let already = c[i] > q[i].floor() as usize;
                if !already && r > best_r {
                    best = i;
                    best_r = r;
                }
            }
            c[best] += 1;
        }
        c
    }

    proptest! {
        #[test]
        fn epsilons_match_normalized_formula(
            n in 1usize..5000,
            k in -3.0f64..3.0,
            lo in 0.0f64..2.0,
            width in 0.01f64..3.0,
            groups in 2usize..40,
        ) {
            let hi = lo + width;
            let shape = EpsilonShape::for_skew(k);
            let eps = generate_epsilons(n, shape, lo, hi, groups).unwrap();
            prop_assert_eq!(eps.len(), n);
            prop_assert!(eps.iter().all(|e| *e >= lo && *e <= hi));
            let levels = group_levels(lo, hi, groups).unwrap();
            let weights: Vec<f64> = levels.iter().map(|&e| shape.weight(e)).collect();
            let counts = group_counts(n, shape, lo, hi, groups).unwrap();
            prop_assert_eq!(&counts, &reference_counts(n, &weights));
            for (lvl, c) in levels.iter().zip(&counts) {
                prop_assert_eq!(eps.iter().filter(|e| *e == lvl).count(), *c);
            }
        }
    }
}
