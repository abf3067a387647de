//! Non-IID partitioning: label-quantity (`#C = k`), label-Dirichlet,
//! quantity-Dirichlet, Gaussian feature noise, IID, and the two mixed
//! settings that apply a Dirichlet partition followed by noise.

use super::Dataset;
use crate::error::{invalid, Error, Result};
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Normal};

/// Maximum number of redraws when a Dirichlet draw leaves a client short.
pub const MAX_PARTITION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Iid,
    LabelQuantity { k: usize },
    LabelDirichlet { epsilon: f64 },
    FeatureNoise { sigma: f64 },
    QuantityDirichlet { epsilon: f64 },
    MixedLabelFeature { epsilon: f64, sigma: f64 },
    MixedFeatureQuantity { epsilon: f64, sigma: f64 },
}

impl Strategy {
    /// Short identifier used in reports (`iid`, `c2`, `pdir0.5`, ...).
    pub fn tag(&self) -> String {
        match self {
            Strategy::Iid => "iid".into(),
            Strategy::LabelQuantity { k } => format!("c{k}"),
            Strategy::LabelDirichlet { epsilon } => format!("pdir{epsilon}"),
            Strategy::FeatureNoise { sigma } => format!("gau{sigma}"),
            Strategy::QuantityDirichlet { epsilon } => format!("qdir{epsilon}"),
            Strategy::MixedLabelFeature { epsilon, sigma } => format!("mixlf{epsilon}/{sigma}"),
            Strategy::MixedFeatureQuantity { epsilon, sigma } => format!("mixfq{epsilon}/{sigma}"),
        }
    }

    /// Table category the setting belongs to.
    pub fn category(&self) -> &'static str {
        match self {
            Strategy::Iid => "homogeneous",
            Strategy::LabelQuantity { .. } | Strategy::LabelDirichlet { .. } => "label",
            Strategy::FeatureNoise { .. } => "feature",
            Strategy::QuantityDirichlet { .. } => "quantity",
            Strategy::MixedLabelFeature { .. } | Strategy::MixedFeatureQuantity { .. } => "mixed",
        }
    }

    fn noise_sigma(&self) -> f64 {
        match *self {
            Strategy::FeatureNoise { sigma }
            | Strategy::MixedLabelFeature { sigma, .. }
            | Strategy::MixedFeatureQuantity { sigma, .. } => sigma,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub strategy: Strategy,
    pub num_clients: usize,
    pub seed: u64,
    /// Dirichlet draws leaving any client with fewer samples are redrawn.
    pub min_client_samples: usize,
}

impl PartitionSpec {
    pub fn new(strategy: Strategy, num_clients: usize, seed: u64) -> Self {
        Self {
            strategy,
            num_clients,
            seed,
            min_client_samples: 1,
        }
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.num_clients < 2 {
            return Err(invalid("partitioning needs at least two clients"));
        }
        let check_eps = |e: f64| {
            if e > 0.0 && e.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("Dirichlet concentration must be > 0, got {e}")))
            }
        };
        let check_sigma = |s: f64| {
            if s >= 0.0 && s.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("noise level must be >= 0, got {s}")))
            }
        };
        match self.strategy {
            Strategy::Iid => Ok(()),
            Strategy::LabelQuantity { k } if k == 0 || k > num_classes => Err(invalid(format!(
                "#C = {k} must lie in [1, {num_classes}]"
            ))),
            Strategy::LabelQuantity { .. } => Ok(()),
            Strategy::LabelDirichlet { epsilon } | Strategy::QuantityDirichlet { epsilon } => {
                check_eps(epsilon)
            }
            Strategy::FeatureNoise { sigma } => check_sigma(sigma),
            Strategy::MixedLabelFeature { epsilon, sigma }
            | Strategy::MixedFeatureQuantity { epsilon, sigma } => {
                check_eps(epsilon)?;
                check_sigma(sigma)
            }
        }
    }
}

/// Disjoint per-client index lists over a source dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionAssignment {
    pub client_indices: Vec<Vec<usize>>,
    pub source_size: usize,
    pub warnings: Vec<String>,
}

impl PartitionAssignment {
    pub fn num_clients(&self) -> usize {
        self.client_indices.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.client_indices.iter().map(Vec::len).collect()
    }

    /// Checks pairwise disjointness and that every index is in range.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = vec![false; self.source_size];
        for idx in self.client_indices.iter().flatten() {
            if *idx >= self.source_size || seen[*idx] {
                return false;
            }
            seen[*idx] = true;
        }
        true
    }

    pub fn covers_all(&self) -> bool {
        self.is_disjoint() && self.client_indices.iter().map(Vec::len).sum::<usize>() == self.source_size
    }
}

fn shuffled(indices: &mut [usize], rng: &mut seed::Rng) {
    indices.shuffle(rng);
}

fn draw_dirichlet(n: usize, epsilon: f64, rng: &mut seed::Rng) -> Vec<f64> {
    let gamma = Gamma::new(epsilon, 1.0).expect("epsilon validated positive");
    let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.into_iter().map(|g| g / total).collect()
    } else {
        // every gamma draw underflowed: all mass on one client
        let mut q = vec![0.0; n];
        q[rng.random_range(0..n)] = 1.0;
        q
    }
}

/// Rounds `q · total` to integers summing to `total` (largest remainder,
/// lower index first on equal remainders).
fn largest_remainder(q: &[f64], total: usize) -> Vec<usize> {
    let exact: Vec<f64> = q.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).expect("finite").then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn split_by_counts(indices: &[usize], counts: &[usize], out: &mut [Vec<usize>]) {
    let mut start = 0;
    for (client, &c) in counts.iter().enumerate() {
        out[client].extend_from_slice(&indices[start..start + c]);
        start += c;
    }
}

pub fn partition_iid(ds: &Dataset, num_clients: usize, seed: u64) -> Result<PartitionAssignment> {
    if num_clients == 0 || ds.len() < num_clients {
        return Err(invalid(format!(
            "IID split of {} samples over {num_clients} clients",
            ds.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut all: Vec<usize> = (0..ds.len()).collect();
    shuffled(&mut all, &mut rng);
    let base = ds.len() / num_clients;
    let rem = ds.len() % num_clients;
    let counts: Vec<usize> = (0..num_clients).map(|i| base + usize::from(i < rem)).collect();
    let mut clients = vec![Vec::new(); num_clients];
    split_by_counts(&all, &counts, &mut clients);
    Ok(PartitionAssignment {
        client_indices: clients,
        source_size: ds.len(),
        warnings: Vec::new(),
    })
}

/// `#C = k`: each client draws `k` distinct labels; each label's samples are
/// split equally among its holders, remainder one per holder in client order.
pub fn partition_label_quantity(
    ds: &Dataset,
    num_clients: usize,
    k: usize,
    seed: u64,
) -> Result<PartitionAssignment> {
    let classes = ds.num_classes();
    if k == 0 || k > classes {
        return Err(invalid(format!("#C = {k} must lie in [1, {classes}]")));
    }
    let mut rng = seed::rng(seed);
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for client in 0..num_clients {
        let mut labels: Vec<usize> = (0..classes).collect();
        let (chosen, _) = labels.partial_shuffle(&mut rng, k);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        for c in chosen {
            holders[c].push(client);
        }
    }
    let mut clients = vec![Vec::new(); num_clients];
    let mut warnings = Vec::new();
    for (c, owners) in holders.iter().enumerate() {
        let mut idx = ds.indices_of_label(c);
        if owners.is_empty() {
            if !idx.is_empty() {
                let msg = format!("label {c} is held by no client; {} samples dropped", idx.len());
                log::warn!("{msg}");
                warnings.push(msg);
            }
            continue;
        }
        shuffled(&mut idx, &mut rng);
        let base = idx.len() / owners.len();
        let rem = idx.len() % owners.len();
        let counts: Vec<usize> = (0..owners.len()).map(|t| base + usize::from(t < rem)).collect();
        let mut start = 0;
        for (t, &owner) in owners.iter().enumerate() {
            clients[owner].extend_from_slice(&idx[start..start + counts[t]]);
            start += counts[t];
        }
    }
    Ok(PartitionAssignment {
        client_indices: clients,
        source_size: ds.len(),
        warnings,
    })
}

fn with_retries<F>(seed: u64, min_samples: usize, mut attempt: F) -> Result<PartitionAssignment>
where
    F: FnMut(&mut seed::Rng) -> PartitionAssignment,
{
    for a in 0..MAX_PARTITION_ATTEMPTS {
        let mut rng = seed::rng(seed.wrapping_add(a as u64));
        let out = attempt(&mut rng);
        if out.client_indices.iter().all(|c| c.len() >= min_samples.max(1)) {
            return Ok(out);
        }
    }
    Err(Error::PartitionRetryExhausted {
        attempts: MAX_PARTITION_ATTEMPTS,
    })
}

/// `p_k ~ Dir(ε)`: per label, a Dirichlet draw over clients sets the share of
/// that label's samples each client receives.
pub fn partition_label_dirichlet(
    ds: &Dataset,
    num_clients: usize,
    epsilon: f64,
    seed: u64,
    min_samples: usize,
) -> Result<PartitionAssignment> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("Dirichlet concentration must be > 0, got {epsilon}")));
    }
    let by_label: Vec<Vec<usize>> = (0..ds.num_classes()).map(|c| ds.indices_of_label(c)).collect();
    with_retries(seed, min_samples, |rng| {
        let mut clients = vec![Vec::new(); num_clients];
        for idx in &by_label {
            let mut idx = idx.clone();
            shuffled(&mut idx, rng);
            let q = draw_dirichlet(num_clients, epsilon, rng);
            split_by_counts(&idx, &largest_remainder(&q, idx.len()), &mut clients);
        }
        PartitionAssignment {
            client_indices: clients,
            source_size: ds.len(),
            warnings: Vec::new(),
        }
    })
}

/// `q ~ Dir(ε)`: one Dirichlet draw sets each client's share of the shuffled
/// dataset.
pub fn partition_quantity_dirichlet(
    ds: &Dataset,
    num_clients: usize,
    epsilon: f64,
    seed: u64,
    min_samples: usize,
) -> Result<PartitionAssignment> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("Dirichlet concentration must be > 0, got {epsilon}")));
    }
    with_retries(seed, min_samples, |rng| {
        let mut all: Vec<usize> = (0..ds.len()).collect();
        shuffled(&mut all, rng);
        let q = draw_dirichlet(num_clients, epsilon, rng);
        let mut clients = vec![Vec::new(); num_clients];
        split_by_counts(&all, &largest_remainder(&q, all.len()), &mut clients);
        PartitionAssignment {
            client_indices: clients,
            source_size: ds.len(),
            warnings: Vec::new(),
        }
    })
}

/// Adds i.i.d. `N(0, σ·i/N)` noise (variance, not standard deviation) to
/// every feature of client `client` (1-based).
pub fn add_feature_noise(
    ds: &Dataset,
    client: usize,
    num_clients: usize,
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if client == 0 || client > num_clients {
        return Err(invalid(format!("client index {client} outside [1, {num_clients}]")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("noise level must be >= 0, got {sigma}")));
    }
    let mut out = ds.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let std = (sigma * client as f64 / num_clients as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("finite std");
    let mut rng = seed::rng(seed::derive(seed, &[seed::NOISE, client as u64]));
    for x in out.features_mut() {
        *x += normal.sample(&mut rng);
    }
    Ok(out)
}

/// Dirichlet partition followed by per-client feature noise.
pub fn compose_mixed(
    ds: &Dataset,
    spec: &PartitionSpec,
) -> Result<(PartitionAssignment, Vec<Dataset>)> {
    let (epsilon, sigma, label) = match spec.strategy {
        Strategy::MixedLabelFeature { epsilon, sigma } => (epsilon, sigma, true),
        Strategy::MixedFeatureQuantity { epsilon, sigma } => (epsilon, sigma, false),
        other => {
            return Err(invalid(format!(
                "compose_mixed needs a mixed strategy, got {}",
                other.tag()
            )))
        }
    };
    let n = spec.num_clients;
    let assignment = if label {
        partition_label_dirichlet(ds, n, epsilon, spec.seed, spec.min_client_samples)?
    } else {
        partition_quantity_dirichlet(ds, n, epsilon, spec.seed, spec.min_client_samples)?
    };
    let views = noisy_views(ds, &assignment, sigma, spec.seed)?;
    Ok((assignment, views))
}

fn noisy_views(
    ds: &Dataset,
    assignment: &PartitionAssignment,
    sigma: f64,
    seed: u64,
) -> Result<Vec<Dataset>> {
    let n = assignment.num_clients();
    assignment
        .client_indices
        .iter()
        .enumerate()
        .map(|(i, idx)| add_feature_noise(&ds.subset(idx), i + 1, n, sigma, seed))
        .collect()
}

/// Applies any strategy, returning the assignment and each client's
/// (possibly noised) local data.
pub fn apply(ds: &Dataset, spec: &PartitionSpec) -> Result<(PartitionAssignment, Vec<Dataset>)> {
    spec.validate(ds.num_classes())?;
    let n = spec.num_clients;
    let min = spec.min_client_samples;
    let assignment = match spec.strategy {
        Strategy::Iid | Strategy::FeatureNoise { .. } => partition_iid(ds, n, spec.seed)?,
        Strategy::LabelQuantity { k } => partition_label_quantity(ds, n, k, spec.seed)?,
        Strategy::LabelDirichlet { epsilon } => {
            partition_label_dirichlet(ds, n, epsilon, spec.seed, min)?
        }
        Strategy::QuantityDirichlet { epsilon } => {
            partition_quantity_dirichlet(ds, n, epsilon, spec.seed, min)?
        }
        Strategy::MixedLabelFeature { .. } | Strategy::MixedFeatureQuantity { .. } => {
            return compose_mixed(ds, spec)
        }
    };
    if let Some(i) = assignment.client_indices.iter().position(|c| c.len() < min.max(1)) {
        return Err(invalid(format!(
            "client {i} received {} samples, fewer than the required {min}",
            assignment.client_indices[i].len()
        )));
    }
    let views = noisy_views(ds, &assignment, spec.strategy.noise_sigma(), spec.seed)?;
    Ok((assignment, views))
}

/// A client's local data carved into train, validation, and test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientData {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

impl ClientData {
    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }
}

/// Seeded split: 20% test, then 20% of the remainder for validation, the
/// rest for training. Each split receives at least one sample.
pub fn split_client(local: &Dataset, seed: u64) -> Result<ClientData> {
    let m = local.len();
    if m < 3 {
        return Err(invalid(format!(
            "a client needs at least 3 samples for train/validation/test, got {m}"
        )));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    shuffled(&mut idx, &mut seed::rng(seed));
    let n_test = ((0.2 * m as f64).round() as usize).clamp(1, m - 2);
    let n_val = ((0.2 * (m - n_test) as f64).round() as usize).clamp(1, m - n_test - 1);
    Ok(ClientData {
        test: local.subset(&idx[..n_test]),
        validation: local.subset(&idx[n_test..n_test + n_val]),
        train: local.subset(&idx[n_test + n_val..]),
    })
}

/// Partitioned data ready for a federation.
#[derive(Debug, Clone)]
pub struct FederatedData {
    pub assignment: PartitionAssignment,
    pub clients: Vec<ClientData>,
}

pub fn build_clients(ds: &Dataset, spec: &PartitionSpec) -> Result<FederatedData> {
    let (assignment, views) = apply(ds, spec)?;
    let clients = views
        .iter()
        .enumerate()
        .map(|(i, v)| split_client(v, seed::derive(spec.seed, &[seed::SPLIT, i as u64])))
        .collect::<Result<Vec<_>>>()?;
    Ok(FederatedData { assignment, clients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;

    fn ds() -> Dataset {
        generate_synthetic(10, 4, 100, 1.0, 3).unwrap()
    }

    fn label_sets(ds: &Dataset, a: &PartitionAssignment) -> Vec<Vec<usize>> {
        a.client_indices
            .iter()
            .map(|idx| {
                let mut s: Vec<usize> = idx.iter().map(|&i| ds.label(i)).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect()
    }

    #[test]
    fn label_quantity_one_label_each() {
        let d = ds();
        let a = partition_label_quantity(&d, 10, 1, 5).unwrap();
        assert!(a.is_disjoint());
        assert!(label_sets(&d, &a).iter().all(|s| s.len() == 1));
    }

    #[test]
    fn label_quantity_all_labels_equal_division() {
        let d = ds();
        let a = partition_label_quantity(&d, 10, 10, 5).unwrap();
        assert!(a.covers_all());
        for c in 0..10 {
            let per: Vec<usize> = a
                .client_indices
                .iter()
                .map(|idx| idx.iter().filter(|&&i| d.label(i) == c).count())
                .collect();
            let (lo, hi) = (per.iter().min().unwrap(), per.iter().max().unwrap());
            assert!(hi - lo <= 1, "label {c}: {per:?}");
        }
    }

    #[test]
    fn label_quantity_two_clients_is_disjoint_subset() {
        let d = ds();
        let a = partition_label_quantity(&d, 2, 2, 9).unwrap();
        assert!(a.is_disjoint());
        assert!(a.sizes().iter().sum::<usize>() <= d.len());
        // at most 4 of 10 labels are held, so the rest are reported
        assert!(!a.warnings.is_empty());
    }

    #[test]
    fn label_quantity_rejects_k_above_classes() {
        assert!(matches!(
            partition_label_quantity(&ds(), 4, 11, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn iid_equal_sizes() {
        let d = ds();
        let a = partition_iid(&d, 10, 1).unwrap();
        assert!(a.covers_all());
        assert_eq!(a.sizes(), vec![100; 10]);
        assert!(partition_iid(&d.subset(&[0, 1, 2]), 10, 1).is_err());
    }

    #[test]
    fn dirichlet_partitions_cover_everything() {
        let d = ds();
        for s in 0..3 {
            assert!(partition_label_dirichlet(&d, 10, 0.5, s, 1).unwrap().covers_all());
            let q = partition_quantity_dirichlet(&d, 10, 0.5, s, 1).unwrap();
            assert!(q.covers_all());
            assert_eq!(q.sizes().iter().sum::<usize>(), d.len());
        }
    }

    #[test]
    fn retry_budget_exhaustion_is_reported() {
        // 20 samples cannot give 20 clients 3 samples each
        let d = ds().subset(&(0..20).collect::<Vec<_>>());
        assert_eq!(
            partition_quantity_dirichlet(&d, 20, 0.5, 0, 3),
            Err(Error::PartitionRetryExhausted { attempts: 100 })
        );
    }

    #[test]
    fn zero_noise_is_bitwise_identity() {
        let d = ds();
        let noised = add_feature_noise(&d, 3, 10, 0.0, 1).unwrap();
        assert_eq!(noised, d);
        assert!(add_feature_noise(&d, 0, 10, 0.1, 1).is_err());
        assert!(add_feature_noise(&d, 11, 10, 0.1, 1).is_err());
    }

    #[test]
    fn mixed_with_zero_sigma_matches_plain_dirichlet() {
        let d = ds();
        let spec = PartitionSpec::new(Strategy::MixedLabelFeature { epsilon: 0.5, sigma: 0.0 }, 10, 4);
        let (a, views) = compose_mixed(&d, &spec).unwrap();
        assert_eq!(a, partition_label_dirichlet(&d, 10, 0.5, 4, 1).unwrap());
        for (idx, v) in a.client_indices.iter().zip(&views) {
            assert_eq!(&d.subset(idx), v);
        }
        let plain = PartitionSpec::new(Strategy::Iid, 10, 4);
        assert!(compose_mixed(&d, &plain).is_err());
    }

    #[test]
    fn split_is_disjoint_and_sized() {
        let d = ds().subset(&(0..100).collect::<Vec<_>>());
        let c = split_client(&d, 1).unwrap();
        assert_eq!(c.test.len(), 20);
        assert_eq!(c.validation.len(), 16);
        assert_eq!(c.train.len(), 64);
        assert_eq!(c.total(), 100);
        assert!(split_client(&d.subset(&[0, 1]), 1).is_err());
        let tiny = split_client(&d.subset(&[0, 1, 2]), 1).unwrap();
        assert_eq!((tiny.train.len(), tiny.validation.len(), tiny.test.len()), (1, 1, 1));
    }

    #[test]
    fn largest_remainder_sums_exactly() {
        assert_eq!(largest_remainder(&[0.5, 0.25, 0.25], 10), vec![5, 3, 2]);
        assert_eq!(largest_remainder(&[1.0 / 3.0; 3], 10).iter().sum::<usize>(), 10);
    }
}
