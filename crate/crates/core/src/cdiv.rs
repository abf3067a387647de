//! C-divergence estimation with pairwise client discriminators, and the
//! FedCollab coalition-structure search.

use crate::data::{ClientData, Dataset};
use crate::error::{invalid, Result};
use crate::math::{CollaborationMatrix, ProbVector};
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Symmetric N×N matrix of divergences in `[0, 1]` with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CDivMatrix {
    values: Vec<Vec<f64>>,
}

impl CDivMatrix {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        if values.iter().any(|r| r.len() != n) {
            return Err(invalid("C-divergence matrix must be square"));
        }
        for i in 0..n {
            if values[i][i] != 0.0 {
                return Err(invalid(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = values[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
                }
                if (v - values[j][i]).abs() > 1e-9 {
                    return Err(invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

/// Discriminator recipe: logistic regression on `features ⊕ one-hot(label)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Sample pairs per SGD step.
    pub batch_pairs: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            steps: 300,
            learning_rate: 0.05,
            batch_pairs: 16,
        }
    }
}

impl ClassifierConfig {
    /// Weights plus bias of one discriminator.
    pub fn param_count(dim: usize, num_classes: usize) -> usize {
        dim + num_classes + 1
    }
}

fn augmented(ds: &Dataset, i: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(ds.dim() + ds.num_classes() + 1);
    v.extend_from_slice(ds.row(i));
    v.extend((0..ds.num_classes()).map(|c| if c == ds.label(i) { 1.0 } else { 0.0 }));
    v.push(1.0);
    v
}

fn step_fn(score: f64) -> f64 {
    if score > 0.0 {
        1.0
    } else if score < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Estimates `max_f |Pr_i[f = 1] + Pr_j[f = 0] − 1|` with a trained
/// discriminator, evaluated under 0-1 loss on a held-out quarter of each split.
///
/// The recipe is exactly antisymmetric in the two inputs: swapping them
/// negates every weight update bit for bit, so the estimate is symmetric.
pub fn estimate_cdiv_pair(a: &Dataset, b: &Dataset, cfg: &ClassifierConfig, seed: u64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("C-divergence of an empty split"));
    }
    if a.dim() != b.dim() || a.num_classes() != b.num_classes() {
        return Err(invalid("C-divergence between differently shaped splits"));
    }
    let mut rng = seed::rng(seed::derive(seed, &[seed::CDIV]));
    // balance by subsampling the larger split; the draw does not depend on
    // argument order
    let n = a.len().min(b.len());
    let pick = |len: usize, rng: &mut seed::Rng| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..len).collect();
        if len > n {
            idx.shuffle(rng);
            idx.truncate(n);
            idx.sort_unstable();
        }
        idx
    };
    let (ia, ib) = if a.len() >= b.len() {
        let ia = pick(a.len(), &mut rng);
        (ia, (0..n).collect::<Vec<_>>())
    } else {
        let ib = pick(b.len(), &mut rng);
        ((0..n).collect::<Vec<_>>(), ib)
    };
    let xa: Vec<Vec<f64>> = ia.iter().map(|&i| augmented(a, i)).collect();
    let xb: Vec<Vec<f64>> = ib.iter().map(|&i| augmented(b, i)).collect();

    // shared permutation of pair slots; the first quarter is held out
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(&mut rng);
    let held = if n >= 4 { n / 4 } else { n.min(1) };
    let (test, train) = slots.split_at(held);
    let train: &[usize] = if train.is_empty() { test } else { train };

    let width = xa[0].len();
    let mut w = vec![0.0; width];
    let batch = cfg.batch_pairs.max(1);
    for _ in 0..cfg.steps {
        let mut ga = vec![0.0; width];
        let mut gb = vec![0.0; width];
        for _ in 0..batch {
            let k = train[rng.random_range(0..train.len())];
            // target +1 for `a`, −1 for `b`; logistic loss ln(1 + e^{−t·s})
            let sa: f64 = w.iter().zip(&xa[k]).map(|(p, q)| p * q).sum();
            let ca = -1.0 / (1.0 + sa.exp());
            for (g, x) in ga.iter_mut().zip(&xa[k]) {
                *g += ca * x;
            }
            let sb: f64 = w.iter().zip(&xb[k]).map(|(p, q)| p * q).sum();
            let cb = 1.0 / (1.0 + (-sb).exp());
            for (g, x) in gb.iter_mut().zip(&xb[k]) {
                *g += cb * x;
            }
        }
        let scale = cfg.learning_rate / (2 * batch) as f64;
        for ((wv, ga), gb) in w.iter_mut().zip(&ga).zip(&gb) {
            *wv -= scale * (ga + gb);
        }
    }
    let score = |x: &[f64]| -> f64 { w.iter().zip(x).map(|(p, q)| p * q).sum() };
    let pa: f64 = test.iter().map(|&k| step_fn(score(&xa[k]))).sum::<f64>() / test.len() as f64;
    let pb: f64 = test.iter().map(|&k| step_fn(score(&xb[k]))).sum::<f64>() / test.len() as f64;
    // |Pr_a[f=1] + Pr_b[f=0] − 1| = |Pr_a[f=1] − Pr_b[f=1]|
    Ok((pa - pb).abs().clamp(0.0, 1.0))
}

/// Pairwise C-divergence matrix over the clients' training splits.
pub fn cdiv_matrix(clients: &[ClientData], cfg: &ClassifierConfig, seed: u64) -> Result<CDivMatrix> {
    let n = clients.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let pair_seed = seed::derive(seed, &[i as u64, j as u64]);
            let d = estimate_cdiv_pair(&clients[i].train, &clients[j].train, cfg, pair_seed)?;
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    CDivMatrix::new(values)
}

/// Partition of clients into non-empty coalitions, ids numbered by first member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionStructure {
    assignment: Vec<usize>,
}

impl CoalitionStructure {
    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
        }
    }

    /// Builds from arbitrary coalition labels, renumbering canonically.
    pub fn from_assignment(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let assignment = labels
            .iter()
            .map(|&l| match map.iter().find(|(k, _)| *k == l) {
                Some(&(_, id)) => id,
                None => {
                    let id = map.len();
                    map.push((l, id));
                    id
                }
            })
            .collect();
        Self { assignment }
    }

    pub fn num_clients(&self) -> usize {
        self.assignment.len()
    }

    pub fn coalition_of(&self, client: usize) -> usize {
        self.assignment[client]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn coalitions(&self) -> Vec<Vec<usize>> {
        let k = self.assignment.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); k];
        for (client, &c) in self.assignment.iter().enumerate() {
            out[c].push(client);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoalitionCost {
    pub q1: f64,
    pub q2: f64,
    /// Weight each client's bound by its data share β_i.
    pub weight_by_beta: bool,
}

impl Default for CoalitionCost {
    fn default() -> Self {
        Self {
            q1: 1.0,
            q2: 5.0,
            weight_by_beta: false,
        }
    }
}

/// Sum over clients of the bound with proportional in-coalition weights:
/// `q1 / sqrt(M_C) + q2 · Σ_{j∈C} (m_j / M_C) · D(i, j)`.
pub fn coalition_cost(structure: &CoalitionStructure, cdiv: &CDivMatrix, m: &[usize], cost: &CoalitionCost) -> f64 {
    let coalitions = structure.coalitions();
    let total: usize = m.iter().sum();
    let mut sum = 0.0;
    for members in &coalitions {
        let mass: usize = members.iter().map(|&j| m[j]).sum();
        let mass = mass as f64;
        for &i in members {
            let div: f64 = members.iter().map(|&j| m[j] as f64 / mass * cdiv.get(i, j)).sum();
            let bound = cost.q1 / mass.sqrt() + cost.q2 * div;
            sum += if cost.weight_by_beta {
                m[i] as f64 / total as f64 * bound
            } else {
                bound
            };
        }
    }
    sum
}

/// Greedy local search from singletons: repeatedly apply the single-client
/// move (into another coalition or a fresh one) with the largest cost
/// decrease until none decreases the cost. Ties go to the lowest client,
/// then the lowest coalition id.
pub fn optimize_coalitions(cdiv: &CDivMatrix, m: &[usize], cost: &CoalitionCost) -> Result<CoalitionStructure> {
    let n = cdiv.size();
    if n < 2 || m.len() != n {
        return Err(invalid("coalition search needs >= 2 clients with matching sample counts"));
    }
    let mut current = CoalitionStructure::singletons(n);
    let mut current_cost = coalition_cost(&current, cdiv, m, cost);
    loop {
        let k = current.coalitions().len();
        let mut best: Option<(f64, CoalitionStructure)> = None;
        for client in 0..n {
            let from = current.coalition_of(client);
            let alone = current.assignment.iter().filter(|&&c| c == from).count() == 1;
            for target in 0..=k {
                if target == from || (target == k && alone) {
                    continue;
                }
                let mut labels = current.assignment.clone();
                labels[client] = target;
                let candidate = CoalitionStructure::from_assignment(&labels);
                let c = coalition_cost(&candidate, cdiv, m, cost);
                let improves = c < current_cost - 1e-12;
                if improves && best.as_ref().is_none_or(|(bc, _)| c < *bc - 1e-12) {
                    best = Some((c, candidate));
                }
            }
        }
        match best {
            Some((c, s)) => {
                current = s;
                current_cost = c;
            }
            None => return Ok(current),
        }
    }
}

/// `α_{i,j} = m_j / Σ_{l∈C(i)} m_l` inside i's coalition, zero elsewhere.
pub fn coalitions_to_alpha(structure: &CoalitionStructure, m: &[usize]) -> Result<CollaborationMatrix> {
    let n = structure.num_clients();
    if m.len() != n {
        return Err(invalid("sample counts do not match the coalition structure"));
    }
    let coalitions = structure.coalitions();
    let rows = (0..n)
        .map(|i| {
            let members = &coalitions[structure.coalition_of(i)];
            let mass: usize = members.iter().map(|&j| m[j]).sum();
            if mass == 0 {
                return Ok(ProbVector::one_hot(n, i));
            }
            let mut row = vec![0.0; n];
            for &j in members {
                row[j] = m[j] as f64 / mass as f64;
            }
            ProbVector::new(row)
        })
        .collect::<Result<Vec<_>>>()?;
    CollaborationMatrix::new(rows)
}
