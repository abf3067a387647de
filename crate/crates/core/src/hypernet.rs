//! CE: an affine hypernetwork `θ = W·r + b` from preference vectors to
//! model parameters, trained by linear scalarization of client losses. Each
//! client's loss-minimizing preference becomes its α row.

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::math::{simplex_descent, CollaborationMatrix, ParamVector, ProbVector};
use crate::model::{gather, loss_and_grad};
use crate::seed;
use rand::seq::index::sample;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// `W` is `P × N` row-major, `b` has length `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperNetwork {
    w: Vec<f64>,
    b: Vec<f64>,
    template: ParamVector,
    num_clients: usize,
}

/// Standard deviation of the initial `W` entries.
const INIT_SCALE: f64 = 0.01;

impl HyperNetwork {
    /// `b` starts at `base`, `W` at small seeded Gaussian noise.
    pub fn new(base: &ParamVector, num_clients: usize, seed: u64) -> Result<Self> {
        if num_clients == 0 {
            return Err(invalid("hypernetwork needs at least one client"));
        }
        let mut rng = seed::rng(seed::derive(seed, &[seed::HYPERNET]));
        let w = (0..base.len() * num_clients)
            .map(|_| INIT_SCALE * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect::<Vec<f64>>();
        Ok(Self {
            w,
            b: base.flat.clone(),
            template: base.clone(),
            num_clients,
        })
    }

    /// Builds from explicit parameters.
    pub fn from_parts(w: Vec<f64>, b: ParamVector, num_clients: usize) -> Result<Self> {
        if num_clients == 0 || w.len() != b.len() * num_clients {
            return Err(Error::ShapeMismatch(format!(
                "W has {} entries, expected {} × {num_clients}",
                w.len(),
                b.len()
            )));
        }
        Ok(Self {
            w,
            b: b.flat.clone(),
            template: b,
            num_clients,
        })
    }

    pub fn num_clients(&self) -> usize {
        self.num_clients
    }

    pub fn num_outputs(&self) -> usize {
        self.b.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    /// Parameters of the map, `P·(N + 1)`.
    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    fn forward_flat(&self, r: &[f64]) -> Vec<f64> {
        let n = self.num_clients;
        self.b
            .iter()
            .enumerate()
            .map(|(p, b)| b + self.w[p * n..(p + 1) * n].iter().zip(r).map(|(w, r)| w * r).sum::<f64>())
            .collect()
    }

    /// `Wᵀ·g`.
    fn pullback(&self, g: &[f64]) -> Vec<f64> {
        let n = self.num_clients;
        let mut out = vec![0.0; n];
        for (p, gp) in g.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(&self.w[p * n..(p + 1) * n]) {
                *o += w * gp;
            }
        }
        out
    }
}

pub fn hn_forward(hn: &HyperNetwork, r: &ProbVector) -> Result<ParamVector> {
    hn_forward_raw(hn, r.as_slice())
}

/// Forward pass at an arbitrary (not necessarily simplex) input.
pub fn hn_forward_raw(hn: &HyperNetwork, r: &[f64]) -> Result<ParamVector> {
    if r.len() != hn.num_clients {
        return Err(Error::ShapeMismatch(format!(
            "preference of length {} for {} clients",
            r.len(),
            hn.num_clients
        )));
    }
    ParamVector::new(hn.forward_flat(r), hn.template.shapes.clone())
}

/// One client's batch, as passed to the scalarized loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn whole(ds: &Dataset) -> Self {
        let idx: Vec<usize> = (0..ds.len()).collect();
        let (features, labels) = gather(ds, &idx);
        Self { features, labels }
    }
}

/// `Σ_k r_k·L_k(HN(r))` with gradients `∂W = g·rᵀ` and `∂b = g`, where
/// `g = Σ_k r_k·∇_θ L_k`. `batches[k]` may be `None` for clients without data.
pub fn scalarized_loss_and_grad(hn: &HyperNetwork, r: &[f64], batches: &[Option<Batch>]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if batches.len() != hn.num_clients {
        return Err(invalid("one batch slot per client"));
    }
    let theta = hn_forward_raw(hn, r)?;
    let mut g = vec![0.0; theta.len()];
    let mut total = 0.0;
    for (rk, batch) in r.iter().zip(batches) {
        let Some(batch) = batch else { continue };
        if *rk == 0.0 {
            continue;
        }
        let (l, gk) = loss_and_grad(&theta, &batch.features, &batch.labels)?;
        total += rk * l;
        for (a, b) in g.iter_mut().zip(&gk) {
            *a += rk * b;
        }
    }
    let n = hn.num_clients;
    let mut gw = vec![0.0; hn.w.len()];
    for (p, gp) in g.iter().enumerate() {
        for (slot, rk) in gw[p * n..(p + 1) * n].iter_mut().zip(r) {
            *slot = gp * rk;
        }
    }
    Ok((total, gw, g))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnTrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for HnTrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            learning_rate: 0.05,
            batch_size: 64,
        }
    }
}

/// Uniform draw from the simplex, `Dir(1, …, 1)`.
pub fn sample_preference(n: usize, rng: &mut seed::Rng) -> ProbVector {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    if !(s > 0.0) {
        return ProbVector::uniform(n);
    }
    let mut v: Vec<f64> = e.iter().map(|x| x / s).collect();
    let drift: f64 = 1.0 - v.iter().sum::<f64>();
    v[0] = (v[0] + drift).max(0.0);
    ProbVector::new(v).unwrap_or_else(|_| ProbVector::uniform(n))
}

/// SGD on the scalarized loss with a fresh preference and one minibatch per
/// client each step.
pub fn hn_train(hn: &mut HyperNetwork, train: &[Dataset], cfg: &HnTrainConfig, seed: u64) -> Result<()> {
    if cfg.steps == 0 || cfg.batch_size == 0 {
        return Err(invalid("hypernetwork training needs steps >= 1 and batch size >= 1"));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(invalid("hypernetwork learning rate must be > 0"));
    }
    if train.len() != hn.num_clients {
        return Err(invalid("one training split per client"));
    }
    let mut rng = seed::rng(seed::derive(seed, &[seed::HYPERNET, 1]));
    for _ in 0..cfg.steps {
        let r = sample_preference(hn.num_clients, &mut rng);
        let batches: Vec<Option<Batch>> = train
            .iter()
            .map(|ds| {
                if ds.is_empty() {
                    return None;
                }
                let mut idx = sample(&mut rng, ds.len(), cfg.batch_size.min(ds.len())).into_vec();
                idx.sort_unstable();
                let (features, labels) = gather(ds, &idx);
                Some(Batch { features, labels })
            })
            .collect();
        let (_, gw, gb) = scalarized_loss_and_grad(hn, r.as_slice(), &batches)?;
        for (w, g) in hn.w.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g;
        }
        for (b, g) in hn.b.iter_mut().zip(&gb) {
            *b -= cfg.learning_rate * g;
        }
    }
    if hn.w.iter().chain(&hn.b).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("hypernetwork training diverged".into()));
    }
    Ok(())
}

/// `argmin_r L_i(HN(r))` by projected gradient from uniform; the gradient in
/// `r` is `Wᵀ·∇_θ L_i`. Returns the best iterate and its loss.
pub fn solve_preference(hn: &HyperNetwork, train: &Dataset, steps: usize, lr: f64) -> Result<(ProbVector, f64)> {
    if train.is_empty() {
        return Err(invalid("preference solve on an empty split"));
    }
    let batch = Batch::whole(train);
    simplex_descent(ProbVector::uniform(hn.num_clients), steps, lr, |r| {
        let theta = hn_forward_raw(hn, r)?;
        let (l, g) = loss_and_grad(&theta, &batch.features, &batch.labels)?;
        Ok((l, hn.pullback(&g)))
    })
}

/// Per-client preference vectors as the α matrix, the models they induce,
/// and the clients' losses at those models.
#[derive(Debug, Clone)]
pub struct PreferenceResult {
    pub alpha: CollaborationMatrix,
    pub models: Vec<ParamVector>,
    pub losses: Vec<f64>,
}

pub fn ce_alpha_matrix(hn: &HyperNetwork, train: &[Dataset], steps: usize, lr: f64) -> Result<PreferenceResult> {
    if train.len() != hn.num_clients {
        return Err(invalid("one training split per client"));
    }
    let mut rows = Vec::with_capacity(train.len());
    let mut models = Vec::with_capacity(train.len());
    let mut losses = Vec::with_capacity(train.len());
    for ds in train {
        let (r, l) = solve_preference(hn, ds, steps, lr)?;
        models.push(hn_forward(hn, &r)?);
        rows.push(r);
        losses.push(l);
    }
    Ok(PreferenceResult {
        alpha: CollaborationMatrix::new(rows)?,
        models,
        losses,
    })
}
