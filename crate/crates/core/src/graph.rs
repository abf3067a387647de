//! pFedGraph: per-round projected-gradient optimization of each client's α
//! row against its loss at the aggregated model minus a cosine-similarity
//! collaboration reward.

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::math::{cosine_similarity, dot, simplex_descent, CollaborationMatrix, ParamVector, ProbVector};
use crate::model::{gather, loss_and_grad};
use crate::seed;
use rand::seq::index::sample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    pub lambda: f64,
    pub inner_steps: usize,
    pub inner_lr: f64,
    pub loss_batch: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            inner_steps: 50,
            inner_lr: 0.1,
            loss_batch: 64,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda must be finite and >= 0"));
        }
        if self.inner_steps == 0 || self.loss_batch == 0 {
            return Err(invalid("inner_steps and loss_batch must be >= 1"));
        }
        if !(self.inner_lr > 0.0 && self.inner_lr.is_finite()) {
            return Err(invalid("inner_lr must be > 0"));
        }
        Ok(())
    }
}

/// A fixed batch of at most `size` validation samples, drawn without
/// replacement with a seeded generator.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBatch {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

impl LossBatch {
    pub fn draw(validation: &Dataset, size: usize, seed: u64) -> Result<Self> {
        if validation.is_empty() {
            return Err(invalid("loss batch from an empty validation split"));
        }
        let n = validation.len();
        let mut rng = seed::rng(seed::derive(seed, &[seed::VALIDATION_BATCH]));
        let mut idx = sample(&mut rng, n, size.min(n)).into_vec();
        idx.sort_unstable();
        let (features, labels) = gather(validation, &idx);
        Ok(Self { features, labels })
    }

    /// Cross-entropy loss and gradient of a model with layout `shapes`.
    pub fn loss_fn<'a>(&'a self, template: &'a ParamVector) -> impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)> + 'a {
        move |flat: &[f64]| {
            let params = ParamVector::new(flat.to_vec(), template.shapes.clone())?;
            loss_and_grad(&params, &self.features, &self.labels)
        }
    }
}

fn aggregate(alpha: &[f64], models: &[&[f64]]) -> Vec<f64> {
    let mut out = vec![0.0; models[0].len()];
    for (a, m) in alpha.iter().zip(models) {
        if *a == 0.0 {
            continue;
        }
        for (o, w) in out.iter_mut().zip(m.iter()) {
            *o += a * w;
        }
    }
    out
}

fn cosines(i: usize, models: &[&[f64]]) -> Result<Vec<f64>> {
    models.iter().map(|m| cosine_similarity(models[i], m)).collect()
}

fn check(i: usize, alpha_len: usize, models: &[&[f64]]) -> Result<()> {
    if models.is_empty() || i >= models.len() || alpha_len != models.len() {
        return Err(invalid("α row, client index and model list disagree"));
    }
    if models.iter().any(|m| m.len() != models[0].len()) {
        return Err(invalid("models differ in length"));
    }
    Ok(())
}

/// `L_i(Σ_j α_j w_j) − λ/2 · Σ_j α_j cos(w_i, w_j)` and its gradient in α:
/// `⟨∇L(w̄), w_j⟩ − λ/2 · cos(w_i, w_j)`.
pub fn objective_and_grad<F>(i: usize, alpha: &[f64], models: &[&[f64]], lambda: f64, mut loss: F) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    check(i, alpha.len(), models)?;
    let cos = cosines(i, models)?;
    let (l, g) = loss(&aggregate(alpha, models))?;
    let reward: f64 = alpha.iter().zip(&cos).map(|(a, c)| a * c).sum();
    let grad = models
        .iter()
        .zip(&cos)
        .map(|(m, c)| dot(&g, m) - 0.5 * lambda * c)
        .collect();
    Ok((l - 0.5 * lambda * reward, grad))
}

/// Objective value only.
pub fn objective_row<F>(i: usize, alpha: &[f64], models: &[&[f64]], lambda: f64, loss: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    objective_and_grad(i, alpha, models, lambda, loss).map(|(v, _)| v)
}

/// Projected gradient descent from `init`, returning the best iterate.
pub fn optimize_alpha_row<F>(i: usize, models: &[&[f64]], cfg: &GraphConfig, init: ProbVector, mut loss: F) -> Result<ProbVector>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    check(i, init.len(), models)?;
    let cos = cosines(i, models)?;
    let (best, _) = simplex_descent(init, cfg.inner_steps, cfg.inner_lr, |alpha| {
        let (l, g) = loss(&aggregate(alpha, models))?;
        let reward: f64 = alpha.iter().zip(&cos).map(|(a, c)| a * c).sum();
        let grad = models
            .iter()
            .zip(&cos)
            .map(|(m, c)| dot(&g, m) - 0.5 * cfg.lambda * c)
            .collect();
        Ok((l - 0.5 * cfg.lambda * reward, grad))
    })?;
    Ok(best)
}

/// Optimizes every row against the same model snapshot, warm-starting each
/// from `previous` (uniform when absent).
pub fn pfedgraph_round(
    models: &[ParamVector],
    batches: &[LossBatch],
    cfg: &GraphConfig,
    previous: Option<&CollaborationMatrix>,
) -> Result<CollaborationMatrix> {
    let n = models.len();
    if n < 2 || batches.len() != n {
        return Err(invalid("pFedGraph needs >= 2 clients and one loss batch each"));
    }
    if previous.is_some_and(|p| p.size() != n) {
        return Err(invalid("previous α has the wrong size"));
    }
    let flats: Vec<&[f64]> = models.iter().map(|m| m.flat.as_slice()).collect();
    let rows = (0..n)
        .map(|i| {
            let init = previous.map_or_else(|| ProbVector::uniform(n), |p| p.row(i).clone());
            optimize_alpha_row(i, &flats, cfg, init, batches[i].loss_fn(&models[i]))
        })
        .collect::<Result<Vec<_>>>()?;
    CollaborationMatrix::new(rows)
}
