//! Discrete distributions, KL/JS divergence, and the divergence-weighted
//! collaboration solver (pFedJS).
//!
//! Each client's row minimizes the generalization bound
//!
//! ```text
//! q1 · sqrt( Σ_j α_j² / m_j ) + q2 · Σ_j α_j · D(i, j)
//! ```
//!
//! over the probability simplex, with `D` the pairwise JS divergence of the
//! clients' empirical distributions.

use crate::data::{ClientData, Dataset};
use crate::error::{invalid, Error, Result};
use crate::math::{simplex_descent, CollaborationMatrix, ProbVector};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: ProbVector,
}

impl DiscreteDistribution {
    pub fn new(probs: ProbVector) -> Self {
        Self { probs }
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(invalid("cannot normalize an all-zero histogram"));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self {
            probs: ProbVector::new(probs)?,
        })
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        self.probs.as_slice()
    }
}

/// Which empirical distribution the JS divergence is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Label,
    /// Labels crossed with an equal-width binning of each sample's mean feature.
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsConfig {
    pub space: Space,
    pub feature_bins: usize,
    pub q1: f64,
    pub q2: f64,
    pub solver_steps: usize,
    pub solver_lr: f64,
}

impl Default for JsConfig {
    fn default() -> Self {
        Self {
            space: Space::Label,
            feature_bins: 10,
            q1: 1.0,
            q2: 5.0,
            solver_steps: 500,
            solver_lr: 0.05,
        }
    }
}

impl JsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.space == Space::Joint && self.feature_bins < 2 {
            return Err(invalid("joint space needs at least 2 feature bins"));
        }
        if !(self.q1 > 0.0 && self.q2 > 0.0) {
            return Err(invalid("q1 and q2 must be positive"));
        }
        if !(self.solver_lr > 0.0) {
            return Err(invalid("solver learning rate must be positive"));
        }
        Ok(())
    }
}

pub fn label_histogram(split: &Dataset, num_classes: usize) -> Result<DiscreteDistribution> {
    if split.is_empty() {
        return Err(invalid("label histogram of an empty split"));
    }
    let mut counts = vec![0; num_classes];
    for &y in split.labels() {
        if y >= num_classes {
            return Err(invalid(format!("label {y} outside [0, {num_classes})")));
        }
        counts[y] += 1;
    }
    DiscreteDistribution::from_counts(&counts)
}

/// Mean over dimensions of one sample; the scalar feature summary binned
/// in joint mode.
pub fn feature_statistic(row: &[f64]) -> f64 {
    row.iter().sum::<f64>() / row.len() as f64
}

/// `(min, max)` of the feature statistic across every sample of every split.
pub fn statistic_range<'a>(splits: impl IntoIterator<Item = &'a Dataset>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for ds in splits {
        for i in 0..ds.len() {
            let s = feature_statistic(ds.row(i));
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    (lo, hi)
}

/// Histogram over `num_classes × feature_bins` cells, cell `y·bins + b`.
pub fn joint_histogram(
    split: &Dataset,
    num_classes: usize,
    feature_bins: usize,
    range: (f64, f64),
) -> Result<DiscreteDistribution> {
    if split.is_empty() {
        return Err(invalid("joint histogram of an empty split"));
    }
    if feature_bins < 2 {
        return Err(invalid("joint histogram needs at least 2 feature bins"));
    }
    let (lo, hi) = range;
    let width = (hi - lo) / feature_bins as f64;
    let mut counts = vec![0; num_classes * feature_bins];
    for i in 0..split.len() {
        let y = split.label(i);
        if y >= num_classes {
            return Err(invalid(format!("label {y} outside [0, {num_classes})")));
        }
        let s = feature_statistic(split.row(i));
        let b = if width > 0.0 {
            (((s - lo) / width).floor().max(0.0) as usize).min(feature_bins - 1)
        } else {
            0
        };
        counts[y * feature_bins + b] += 1;
    }
    DiscreteDistribution::from_counts(&counts)
}

fn same_support(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.support_size() != q.support_size() {
        return Err(invalid(format!(
            "support sizes differ: {} vs {}",
            p.support_size(),
            q.support_size()
        )));
    }
    Ok(())
}

fn kl_terms(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (z, (&pz, &qz)) in p.iter().zip(q).enumerate() {
        if pz == 0.0 {
            continue;
        }
        if qz == 0.0 {
            return Err(Error::Support { index: z });
        }
        total += pz * (pz / qz).ln();
    }
    Ok(total.max(0.0))
}

/// Natural-log KL divergence `Σ P(z) ln(P(z)/Q(z))`.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    same_support(p, q)?;
    kl_terms(p.probs(), q.probs())
}

/// `½ KL(P, M) + ½ KL(Q, M)` with `M = ½(P + Q)`; lies in `[0, ln 2]`.
pub fn js_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    same_support(p, q)?;
    let (p, q) = (p.probs(), q.probs());
    let mut total = 0.0;
    // Summed as one symmetric expression per cell so JSD(P,Q) and JSD(Q,P)
    // round identically.
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        let ta = if a > 0.0 { a * (a / m).ln() } else { 0.0 };
        let tb = if b > 0.0 { b * (b / m).ln() } else { 0.0 };
        total += 0.5 * (ta + tb);
    }
    Ok(total.clamp(0.0, std::f64::consts::LN_2))
}

/// Value of the bound for one row.
pub fn eq1_objective(alpha: &[f64], divergences: &[f64], sample_counts: &[usize], q1: f64, q2: f64) -> f64 {
    let var: f64 = alpha
        .iter()
        .zip(sample_counts)
        .map(|(a, &m)| a * a / m as f64)
        .sum();
    let div: f64 = alpha.iter().zip(divergences).map(|(a, d)| a * d).sum();
    q1 * var.sqrt() + q2 * div
}

/// Minimizes the bound for client `i` by projected gradient descent from
/// the uniform row, returning the best iterate.
pub fn solve_alpha_eq1(
    i: usize,
    divergences: &[f64],
    sample_counts: &[usize],
    cfg: &JsConfig,
) -> Result<ProbVector> {
    let n = divergences.len();
    if n == 0 || sample_counts.len() != n || i >= n {
        return Err(invalid("divergence row, sample counts and client index disagree"));
    }
    if divergences.iter().any(|d| !d.is_finite()) {
        return Err(invalid("non-finite divergence"));
    }
    if divergences[i].abs() > 1e-12 {
        return Err(invalid(format!("self-divergence D[{i}] = {} is not zero", divergences[i])));
    }
    if sample_counts.contains(&0) {
        return Err(invalid("every client needs at least one sample"));
    }
    let (q1, q2) = (cfg.q1, cfg.q2);
    let (row, _) = simplex_descent(ProbVector::uniform(n), cfg.solver_steps, cfg.solver_lr, |a| {
        let var: f64 = a.iter().zip(sample_counts).map(|(x, &m)| x * x / m as f64).sum();
        let root = var.sqrt();
        let grad = a
            .iter()
            .zip(sample_counts)
            .zip(divergences)
            .map(|((x, &m), d)| q1 * (x / m as f64) / root + q2 * d)
            .collect();
        Ok((eq1_objective(a, divergences, sample_counts, q1, q2), grad))
    })?;
    Ok(row)
}

/// Empirical distribution of each client's training split in the configured space.
pub fn client_distributions(clients: &[ClientData], num_classes: usize, cfg: &JsConfig) -> Result<Vec<DiscreteDistribution>> {
    match cfg.space {
        Space::Label => clients
            .iter()
            .map(|c| label_histogram(&c.train, num_classes))
            .collect(),
        Space::Joint => {
            let range = statistic_range(clients.iter().map(|c| &c.train));
            clients
                .iter()
                .map(|c| joint_histogram(&c.train, num_classes, cfg.feature_bins, range))
                .collect()
        }
    }
}

/// Symmetric zero-diagonal matrix of pairwise JS divergences.
pub fn pairwise_js(dists: &[DiscreteDistribution]) -> Result<Vec<Vec<f64>>> {
    let n = dists.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = js_divergence(&dists[i], &dists[j])?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

/// Precomputed pFedJS collaboration matrix.
pub fn pfedjs_alpha_matrix(clients: &[ClientData], cfg: &JsConfig) -> Result<CollaborationMatrix> {
    if clients.len() < 2 {
        return Err(invalid("pFedJS needs at least two clients"));
    }
    cfg.validate()?;
    let num_classes = clients[0].train.num_classes();
    let dists = client_distributions(clients, num_classes, cfg)?;
    let d = pairwise_js(&dists)?;
    let m: Vec<usize> = clients.iter().map(|c| c.train.len()).collect();
    let rows = (0..clients.len())
        .map(|i| solve_alpha_eq1(i, &d[i], &m, cfg))
        .collect::<Result<Vec<_>>>()?;
    CollaborationMatrix::new(rows)
}
