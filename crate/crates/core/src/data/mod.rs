//! Datasets, the IDX loader, synthetic generation, and non-IID partitioning.

mod idx;
pub mod partition;

pub use idx::{load_idx, parse_idx_images, parse_idx_labels};
pub use partition::{
    add_feature_noise, build_clients, compose_mixed, partition_iid, partition_label_dirichlet,
    partition_label_quantity, partition_quantity_dirichlet, split_client, ClientData,
    FederatedData, PartitionAssignment, PartitionSpec, Strategy,
};

use crate::error::{invalid, Result};
use crate::seed;
use rand_distr::{Distribution, StandardNormal};

/// Distance of each synthetic class mean from the origin along its axis.
pub const SYNTHETIC_MEAN_SCALE: f64 = 3.0;

/// Dense row-major feature matrix with integer labels in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("feature dimension must be positive"));
        }
        if features.len() != labels.len() * dim {
            return Err(invalid(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(invalid(format!("label {bad} outside [0, {num_classes})")));
        }
        Ok(Self {
            features,
            dim,
            labels,
            num_classes,
        })
    }

    /// A dataset with no rows, used for empty subsets.
    pub fn empty(dim: usize, num_classes: usize) -> Self {
        Self {
            features: Vec::new(),
            dim,
            labels: Vec::new(),
            num_classes,
        }
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

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn features_mut(&mut self) -> &mut [f64] {
        &mut self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            features,
            dim: self.dim,
            labels,
            num_classes: self.num_classes,
        }
    }

    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.dim != other.dim || self.num_classes != other.num_classes {
            return Err(invalid("cannot concatenate datasets of different layout"));
        }
        let mut out = self.clone();
        out.features.extend_from_slice(&other.features);
        out.labels.extend_from_slice(&other.labels);
        Ok(out)
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Indices of all samples carrying label `c`, in dataset order.
    pub fn indices_of_label(&self, c: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == c).collect()
    }
}

/// Class-balanced isotropic Gaussian clusters.
///
/// Class `c` is centred on axis `c mod d` at distance
/// `SYNTHETIC_MEAN_SCALE · (1 + c / d)`, so every mean is distinct; `spread`
/// is the per-coordinate standard deviation. Samples are emitted class by
/// class.
pub fn generate_synthetic(
    num_classes: usize,
    dim: usize,
    per_class: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes < 2 || dim < 2 || per_class < 2 {
        return Err(invalid("synthetic data needs C >= 2, d >= 2 and n >= 2"));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(invalid("spread must be finite and nonnegative"));
    }
    let mut rng = seed::rng(seed);
    let mut features = Vec::with_capacity(num_classes * per_class * dim);
    let mut labels = Vec::with_capacity(num_classes * per_class);
    for c in 0..num_classes {
        let mut mean = vec![0.0; dim];
        mean[c % dim] = SYNTHETIC_MEAN_SCALE * (1 + c / dim) as f64;
        for _ in 0..per_class {
            for m in &mean {
                let z: f64 = StandardNormal.sample(&mut rng);
                features.push(m + spread * z);
            }
            labels.push(c);
        }
    }
    Dataset::new(features, dim, labels, num_classes)
}
