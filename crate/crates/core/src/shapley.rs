//! pFedSV: exact Shapley values over each client's top-K coalition, a
//! relevance EMA for coalition selection, and Shapley-weighted α rows.

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::math::{argmax, euclidean_distance, CollaborationMatrix, ParamVector, ProbVector};
use crate::model::evaluate_params;

/// Largest coalition evaluated by subset enumeration (2^10 utilities).
pub const MAX_COALITION: usize = 10;

/// Row `i` holds client i's relevance scores for every client.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceState {
    phi: Vec<Vec<f64>>,
    eta: f64,
    top_k: usize,
}

impl RelevanceState {
    /// Uniform `1/N` relevance everywhere.
    pub fn new(n: usize, eta: f64, top_k: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("relevance state needs at least two clients"));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(invalid(format!("EMA factor must lie in [0, 1], got {eta}")));
        }
        if top_k == 0 || top_k > n - 1 {
            return Err(invalid(format!("top-K must lie in [1, {}], got {top_k}", n - 1)));
        }
        if top_k > MAX_COALITION {
            return Err(Error::CoalitionTooLarge {
                size: top_k,
                limit: MAX_COALITION,
            });
        }
        Ok(Self {
            phi: vec![vec![1.0 / n as f64; n]; n],
            eta,
            top_k,
        })
    }

    pub fn num_clients(&self) -> usize {
        self.phi.len()
    }

    pub fn top_k(&self) -> usize {
        self.top_k
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.phi[i]
    }

    /// The K clients `j ≠ i` with the highest relevance to `i`, lower index
    /// first among ties, returned in ascending id order.
    pub fn select(&self, i: usize) -> Vec<usize> {
        let mut others: Vec<usize> = (0..self.num_clients()).filter(|&j| j != i).collect();
        // stable sort keeps ascending ids among equal scores
        others.sort_by(|&a, &b| self.phi[i][b].total_cmp(&self.phi[i][a]));
        others.truncate(self.top_k);
        others.sort_unstable();
        others
    }
}

/// Shapley values of the members of one coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct SvResult {
    pub coalition: Vec<usize>,
    pub values: Vec<f64>,
    /// Utility of the empty set.
    pub empty_value: f64,
    /// Utility of the whole coalition.
    pub full_value: f64,
}

impl SvResult {
    /// `|Σ sv − (V(full) − V(∅))|`, zero up to rounding.
    pub fn efficiency_gap(&self) -> f64 {
        (self.values.iter().sum::<f64>() - (self.full_value - self.empty_value)).abs()
    }

    pub fn value_of(&self, client: usize) -> Option<f64> {
        self.coalition.iter().position(|&c| c == client).map(|k| self.values[k])
    }
}

/// `V(∅)` is the accuracy of `own`; `V(S)` the accuracy of the unweighted
/// mean of the models in `S`. Both on client i's validation split.
pub fn utility(own: &ParamVector, members: &[&ParamVector], validation: &Dataset) -> Result<f64> {
    if validation.is_empty() {
        return Err(invalid("utility on an empty validation split"));
    }
    if members.is_empty() {
        return Ok(evaluate_params(own, validation)?.accuracy);
    }
    Ok(evaluate_params(&mean_model(members)?, validation)?.accuracy)
}

fn mean_model(models: &[&ParamVector]) -> Result<ParamVector> {
    let first = models[0];
    if models.iter().any(|m| !m.same_layout(first)) {
        return Err(Error::ShapeMismatch("models differ in layout".into()));
    }
    let k = models.len() as f64;
    let mut flat = vec![0.0; first.len()];
    for m in models {
        for (a, w) in flat.iter_mut().zip(&m.flat) {
            *a += w;
        }
    }
    flat.iter_mut().for_each(|a| *a /= k);
    ParamVector::new(flat, first.shapes.clone())
}

/// Exact Shapley values by enumerating all `2^|S|` subsets.
///
/// `value` receives each subset as a list of coalition members in coalition
/// order and is called exactly once per subset.
pub fn exact_shapley<F>(coalition: &[usize], mut value: F) -> Result<SvResult>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    let k = coalition.len();
    if k > MAX_COALITION {
        return Err(Error::CoalitionTooLarge {
            size: k,
            limit: MAX_COALITION,
        });
    }
    let mut v = vec![0.0; 1 << k];
    let mut members = Vec::with_capacity(k);
    for (mask, slot) in v.iter_mut().enumerate() {
        members.clear();
        members.extend((0..k).filter(|b| mask >> b & 1 == 1).map(|b| coalition[b]));
        *slot = value(&members)?;
    }
    // weight of a subset of size s not containing the player: s!(k-s-1)!/k!
    let mut fact = vec![1.0; k + 1];
    for n in 1..=k {
        fact[n] = fact[n - 1] * n as f64;
    }
    let values = (0..k)
        .map(|p| {
            let bit = 1 << p;
            (0..1usize << k)
                .filter(|mask| mask & bit == 0)
                .map(|mask| {
                    let s = mask.count_ones() as usize;
                    fact[s] * fact[k - s - 1] / fact[k] * (v[mask | bit] - v[mask])
                })
                .sum()
        })
        .collect();
    Ok(SvResult {
        coalition: coalition.to_vec(),
        values,
        empty_value: v[0],
        full_value: v[(1 << k) - 1],
    })
}

/// `φ_j ← η·φ_j + (1−η)·sv_j` for the coalition members of row `i`.
pub fn update_relevance(state: &mut RelevanceState, i: usize, sv: &SvResult) -> Result<()> {
    let n = state.num_clients();
    if i >= n || sv.coalition.iter().any(|&j| j >= n) {
        return Err(invalid("coalition member outside the federation"));
    }
    let eta = state.eta;
    for (&j, &value) in sv.coalition.iter().zip(&sv.values) {
        state.phi[i][j] = eta * state.phi[i][j] + (1.0 - eta) * value;
    }
    Ok(())
}

/// Self weight `s` on the diagonal and `1 − s` split in proportion to
/// `max(sv_j, 0) / max(‖w_i − w_j‖, 1e-9)`; one-hot self when every raw
/// weight is zero.
pub fn alpha_row_from_sv(i: usize, sv: &SvResult, models: &[ParamVector], self_weight: f64) -> Result<ProbVector> {
    if !(0.0..1.0).contains(&self_weight) {
        return Err(invalid(format!("self weight must lie in [0, 1), got {self_weight}")));
    }
    let n = models.len();
    if i >= n || sv.coalition.iter().any(|&j| j >= n || j == i) {
        return Err(invalid("coalition must be other clients of the federation"));
    }
    let mut raw = vec![0.0; n];
    for (&j, &value) in sv.coalition.iter().zip(&sv.values) {
        let d = euclidean_distance(&models[i].flat, &models[j].flat)?;
        raw[j] = value.max(0.0) / d.max(1e-9);
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Ok(ProbVector::one_hot(n, i));
    }
    let mut row: Vec<f64> = raw.iter().map(|r| (1.0 - self_weight) * r / total).collect();
    row[i] = self_weight;
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= sum);
    ProbVector::new(row)
}

/// Everything one pFedSV round produces.
#[derive(Debug, Clone)]
pub struct SvRound {
    pub alpha: CollaborationMatrix,
    pub results: Vec<SvResult>,
    /// Peer models downloaded by all clients this round.
    pub downloads: usize,
}

/// One pFedSV round against a snapshot of all client models.
pub fn pfedsv_round(
    state: &mut RelevanceState,
    models: &[ParamVector],
    validations: &[Dataset],
    self_weight: f64,
) -> Result<SvRound> {
    let n = state.num_clients();
    if models.len() != n || validations.len() != n {
        return Err(invalid("one model and one validation split per client"));
    }
    let mut rows = Vec::with_capacity(n);
    let mut results = Vec::with_capacity(n);
    let mut downloads = 0;
    for i in 0..n {
        let coalition = state.select(i);
        downloads += coalition.len();
        let sv = exact_shapley(&coalition, |subset| {
            let members: Vec<&ParamVector> = subset.iter().map(|&j| &models[j]).collect();
            utility(&models[i], &members, &validations[i])
        })?;
        update_relevance(state, i, &sv)?;
        rows.push(alpha_row_from_sv(i, &sv, models, self_weight)?);
        results.push(sv);
    }
    Ok(SvRound {
        alpha: CollaborationMatrix::new(rows)?,
        results,
        downloads,
    })
}

/// Argmax of an α row ignoring the diagonal.
pub fn strongest_peer(row: &ProbVector, i: usize) -> usize {
    let mut v = row.as_slice().to_vec();
    v[i] = f64::NEG_INFINITY;
    argmax(&v)
}
