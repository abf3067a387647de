//! Softmax-output MLP with ReLU hidden layers, hand-derived backpropagation,
//! SGD with momentum, and evaluation.

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::math::{LayerShape, ParamVector};
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Layer layout for an MLP mapping `input` features to `classes` logits.
pub fn mlp_shapes(input: usize, hidden: &[usize], classes: usize) -> Vec<LayerShape> {
    let mut shapes = Vec::with_capacity(hidden.len() + 1);
    let mut fan_in = input;
    for &h in hidden {
        shapes.push(LayerShape::new(h, fan_in));
        fan_in = h;
    }
    shapes.push(LayerShape::new(classes, fan_in));
    shapes
}

/// A feed-forward classifier stored as a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    params: ParamVector,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases; identical seeds give identical models.
    pub fn init(input: usize, hidden: &[usize], classes: usize, seed: u64) -> Result<Self> {
        if input == 0 || classes < 2 || hidden.contains(&0) {
            return Err(invalid("MLP needs positive input, hidden widths, and >= 2 classes"));
        }
        let shapes = mlp_shapes(input, hidden, classes);
        let mut rng = seed::rng(seed);
        let mut flat = Vec::with_capacity(crate::math::expected_len(&shapes));
        for s in &shapes {
            let limit = (6.0 / (s.rows + s.cols) as f64).sqrt();
            flat.extend((0..s.rows * s.cols).map(|_| rng.random_range(-limit..=limit)));
            flat.extend(std::iter::repeat_n(0.0, s.rows));
        }
        Ok(Self {
            params: ParamVector::new(flat, shapes)?,
        })
    }

    pub fn from_params(params: ParamVector) -> Result<Self> {
        let shapes = &params.shapes;
        if shapes.is_empty() {
            return Err(Error::ShapeMismatch("model has no layers".into()));
        }
        if shapes.windows(2).any(|w| w[1].cols != w[0].rows) {
            return Err(Error::ShapeMismatch("layer dimensions do not chain".into()));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn into_params(self) -> ParamVector {
        self.params
    }

    pub fn input_dim(&self) -> usize {
        self.params.shapes[0].cols
    }

    pub fn num_classes(&self) -> usize {
        self.params.shapes.last().map_or(0, |s| s.rows)
    }

    /// Class probabilities, one row per input sample.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if !features.len().is_multiple_of(d) {
            return Err(Error::ShapeMismatch(format!(
                "{} feature values are not a multiple of the input width {d}",
                features.len()
            )));
        }
        let c = self.num_classes();
        let mut out = Vec::with_capacity(features.len() / d * c);
        let mut scratch = Scratch::new(&self.params.shapes);
        for x in features.chunks_exact(d) {
            forward_sample(&self.params, x, &mut scratch);
            out.extend_from_slice(scratch.acts.last().expect("output layer"));
        }
        Ok(out)
    }
}

struct Scratch {
    // acts[0] is the input; acts[l + 1] is the output of layer l
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(shapes: &[LayerShape]) -> Self {
        let mut acts = vec![vec![0.0; shapes[0].cols]];
        acts.extend(shapes.iter().map(|s| vec![0.0; s.rows]));
        let deltas = shapes.iter().map(|s| vec![0.0; s.rows]).collect();
        Self { acts, deltas }
    }
}

fn forward_sample(params: &ParamVector, x: &[f64], s: &mut Scratch) {
    s.acts[0].copy_from_slice(x);
    let last = params.shapes.len() - 1;
    let mut offset = 0;
    for (l, shape) in params.shapes.iter().enumerate() {
        let w = &params.flat[offset..offset + shape.rows * shape.cols];
        let b = &params.flat[offset + shape.rows * shape.cols..offset + shape.param_count()];
        offset += shape.param_count();
        let (prev, next) = s.acts.split_at_mut(l + 1);
        let input = &prev[l];
        let out = &mut next[0];
        for r in 0..shape.rows {
            let row = &w[r * shape.cols..(r + 1) * shape.cols];
            let z = b[r] + row.iter().zip(input.iter()).map(|(a, b)| a * b).sum::<f64>();
            out[r] = if l < last { z.max(0.0) } else { z };
        }
        if l == last {
            softmax_in_place(out);
        }
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Mean cross-entropy over the batch and its gradient with respect to the
/// flat parameters.
pub fn loss_and_grad(params: &ParamVector, features: &[f64], labels: &[usize]) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.len()];
    let loss = accumulate(params, features, labels, Some(&mut grad))?;
    let n = labels.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    Ok((loss, grad))
}

/// Mean cross-entropy only.
pub fn loss(params: &ParamVector, features: &[f64], labels: &[usize]) -> Result<f64> {
    accumulate(params, features, labels, None)
}

fn accumulate(
    params: &ParamVector,
    features: &[f64],
    labels: &[usize],
    mut grad: Option<&mut Vec<f64>>,
) -> Result<f64> {
    if labels.is_empty() {
        return Err(invalid("empty batch"));
    }
    let d = params.shapes[0].cols;
    let classes = params.shapes.last().expect("layers").rows;
    if features.len() != labels.len() * d {
        return Err(Error::ShapeMismatch(format!(
            "batch of {} labels needs {} feature values, got {}",
            labels.len(),
            labels.len() * d,
            features.len()
        )));
    }
    if let Some(y) = labels.iter().find(|&&y| y >= classes) {
        return Err(invalid(format!("label {y} outside [0, {classes})")));
    }
    let shapes = &params.shapes;
    let last = shapes.len() - 1;
    let offsets: Vec<usize> = shapes
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.param_count();
            Some(o)
        })
        .collect();
    let mut s = Scratch::new(shapes);
    let mut total = 0.0;
    for (x, &y) in features.chunks_exact(d).zip(labels) {
        forward_sample(params, x, &mut s);
        total -= s.acts[last + 1][y].max(f64::MIN_POSITIVE).ln();
        let Some(g) = grad.as_deref_mut() else {
            continue;
        };
        // softmax + cross-entropy: dL/dz = p - onehot(y)
        s.deltas[last].copy_from_slice(&s.acts[last + 1]);
        s.deltas[last][y] -= 1.0;
        for l in (0..=last).rev() {
            let shape = shapes[l];
            let (o, nw) = (offsets[l], shape.rows * shape.cols);
            let input = &s.acts[l];
            let delta = &s.deltas[l];
            for r in 0..shape.rows {
                let dr = delta[r];
                if dr == 0.0 {
                    continue;
                }
                let gw = &mut g[o + r * shape.cols..o + (r + 1) * shape.cols];
                for (gv, a) in gw.iter_mut().zip(input.iter()) {
                    *gv += dr * a;
                }
                g[o + nw + r] += dr;
            }
            if l > 0 {
                let w = &params.flat[o..o + nw];
                let (before, after) = s.deltas.split_at_mut(l);
                let prev = &mut before[l - 1];
                let delta = &after[0];
                prev.iter_mut().for_each(|v| *v = 0.0);
                for r in 0..shape.rows {
                    let dr = delta[r];
                    if dr == 0.0 {
                        continue;
                    }
                    for (pv, wv) in prev.iter_mut().zip(&w[r * shape.cols..(r + 1) * shape.cols]) {
                        *pv += dr * wv;
                    }
                }
                // ReLU derivative at the hidden pre-activation
                for (pv, a) in prev.iter_mut().zip(s.acts[l].iter()) {
                    if *a <= 0.0 {
                        *pv = 0.0;
                    }
                }
            }
        }
    }
    Ok(total / labels.len() as f64)
}

/// SGD with heavy-ball momentum: `v ← μ·v + g`, `w ← w − η·v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl SgdState {
    pub fn new(learning_rate: f64, momentum: f64, num_params: usize) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(invalid(format!("learning rate must be > 0, got {learning_rate}")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(invalid(format!("momentum must lie in [0, 1), got {momentum}")));
        }
        Ok(Self {
            learning_rate,
            momentum,
            velocity: vec![0.0; num_params],
        })
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((w, v), g) in params.iter_mut().zip(self.velocity.iter_mut()).zip(grad) {
            *v = self.momentum * *v + g;
            *w -= self.learning_rate * *v;
        }
    }
}

/// Copies the rows named by `indices` into contiguous feature/label buffers.
pub fn gather(ds: &Dataset, indices: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let mut x = Vec::with_capacity(indices.len() * ds.dim());
    let mut y = Vec::with_capacity(indices.len());
    for &i in indices {
        x.extend_from_slice(ds.row(i));
        y.push(ds.label(i));
    }
    (x, y)
}

/// `epochs` seeded-shuffle passes of minibatch SGD over `data`.
pub fn local_train(
    model: &mut MlpModel,
    data: &Dataset,
    epochs: usize,
    batch_size: usize,
    sgd: &mut SgdState,
    seed: u64,
) -> Result<()> {
    if epochs == 0 || batch_size == 0 {
        return Err(invalid("local training needs epochs >= 1 and batch size >= 1"));
    }
    if data.is_empty() {
        return Err(invalid("local training on an empty split"));
    }
    if data.dim() != model.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "data width {} but model input {}",
            data.dim(),
            model.input_dim()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let (x, y) = gather(data, chunk);
            let (_, grad) = loss_and_grad(&model.params, &x, &y)?;
            sgd.step(&mut model.params.flat, &grad);
        }
    }
    if model.params.flat.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical("local training diverged".into()));
    }
    Ok(())
}

/// Mean loss and top-1 accuracy on a split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub mean_loss: f64,
    pub accuracy: f64,
    pub sample_count: usize,
    pub correct: usize,
}

pub fn evaluate(model: &MlpModel, data: &Dataset) -> Result<LossReport> {
    evaluate_params(&model.params, data)
}

pub fn evaluate_params(params: &ParamVector, data: &Dataset) -> Result<LossReport> {
    if data.is_empty() {
        return Err(invalid("evaluation on an empty split"));
    }
    let d = params.shapes[0].cols;
    if data.dim() != d {
        return Err(Error::ShapeMismatch(format!("data width {} but model input {d}", data.dim())));
    }
    let mut s = Scratch::new(&params.shapes);
    let last = params.shapes.len();
    let (mut total, mut correct) = (0.0, 0usize);
    for i in 0..data.len() {
        forward_sample(params, data.row(i), &mut s);
        let probs = &s.acts[last];
        let y = data.label(i);
        total -= probs[y].max(f64::MIN_POSITIVE).ln();
        if crate::math::argmax(probs) == y {
            correct += 1;
        }
    }
    Ok(LossReport {
        mean_loss: total / data.len() as f64,
        accuracy: correct as f64 / data.len() as f64,
        sample_count: data.len(),
        correct,
    })
}
