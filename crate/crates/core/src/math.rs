//! Numeric primitives shared by every scheme: simplex projection, vector
//! similarity and distance, and the flat parameter representation used for
//! aggregation and communication accounting.

use crate::error::{invalid, Error, Result};

/// Tolerance used to decide whether a vector lies on the probability simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the probability simplex: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("probability vector must be non-empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid(format!(
                "probability entry {i} is {} (must be finite and >= 0)",
                values[i]
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(invalid(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(Self(values))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty support");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, at: usize) -> Self {
        assert!(at < n);
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Index of the largest entry of a slice; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Row-stochastic N×N matrix; row i holds client i's aggregation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CollaborationMatrix {
    rows: Vec<ProbVector>,
}

impl CollaborationMatrix {
    pub fn new(rows: Vec<ProbVector>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(invalid("collaboration matrix needs at least one row"));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "row {i} has length {}, expected {n}",
                rows[i].len()
            )));
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n).map(|i| ProbVector::one_hot(n, i)).collect(),
        }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            rows: (0..n).map(|_| ProbVector::uniform(n)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &ProbVector {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[ProbVector] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// Σ_{j≠i} α_{i,j}.
    pub fn off_diagonal_mass(&self, i: usize) -> f64 {
        1.0 - self.rows[i][i]
    }

    /// Mean over rows of the off-diagonal mass.
    pub fn mean_off_diagonal_mass(&self) -> f64 {
        (0..self.size()).map(|i| self.off_diagonal_mass(i)).sum::<f64>() / self.size() as f64
    }
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Result<ProbVector> {
    if v.is_empty() {
        return Err(invalid("cannot project an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid("cannot project a vector with non-finite entries"));
    }
    let mut sorted = v.to_vec();
    // stable: equal values keep index order
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));

    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        }
    }
    let projected: Vec<f64> = v.iter().map(|x| (x - threshold).max(0.0)).collect();
    // Rounding can leave the sum a few ulps away from one; renormalize.
    let sum: f64 = projected.iter().sum();
    Ok(ProbVector(projected.into_iter().map(|x| x / sum).collect()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Dimensions of one dense layer: a `rows × cols` weight matrix
/// (outputs × inputs) followed by a bias of length `rows`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
}

impl LayerShape {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn param_count(&self) -> usize {
        self.rows * self.cols + self.rows
    }
}

/// Structured parameters of one layer; `weights` is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub shape: LayerShape,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(shape: LayerShape) -> Self {
        Self {
            shape,
            weights: vec![0.0; shape.rows * shape.cols],
            bias: vec![0.0; shape.rows],
        }
    }
}

/// Flat parameter vector with the layer layout needed to rebuild a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub flat: Vec<f64>,
    pub shapes: Vec<LayerShape>,
}

impl ParamVector {
    pub fn new(flat: Vec<f64>, shapes: Vec<LayerShape>) -> Result<Self> {
        let expected = expected_len(&shapes);
        if flat.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "flat length {} but shapes demand {expected}",
                flat.len()
            )));
        }
        Ok(Self { flat, shapes })
    }

    pub fn zeros(shapes: Vec<LayerShape>) -> Self {
        Self {
            flat: vec![0.0; expected_len(&shapes)],
            shapes,
        }
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        self.shapes == other.shapes
    }
}

pub fn expected_len(shapes: &[LayerShape]) -> usize {
    shapes.iter().map(LayerShape::param_count).sum()
}

/// Concatenates layers in order, weights before biases within each layer.
pub fn flatten(layers: &[Layer]) -> Result<ParamVector> {
    let mut flat = Vec::with_capacity(layers.iter().map(|l| l.shape.param_count()).sum());
    for (k, layer) in layers.iter().enumerate() {
        if layer.weights.len() != layer.shape.rows * layer.shape.cols
            || layer.bias.len() != layer.shape.rows
        {
            return Err(Error::ShapeMismatch(format!(
                "layer {k} buffers disagree with its declared shape"
            )));
        }
        flat.extend_from_slice(&layer.weights);
        flat.extend_from_slice(&layer.bias);
    }
    Ok(ParamVector {
        flat,
        shapes: layers.iter().map(|l| l.shape).collect(),
    })
}

pub fn unflatten(params: &ParamVector) -> Result<Vec<Layer>> {
    let expected = expected_len(&params.shapes);
    if params.flat.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "flat length {} but shapes demand {expected}",
            params.flat.len()
        )));
    }
    let mut offset = 0;
    let mut layers = Vec::with_capacity(params.shapes.len());
    for &shape in &params.shapes {
        let w = shape.rows * shape.cols;
        let weights = params.flat[offset..offset + w].to_vec();
        offset += w;
        let bias = params.flat[offset..offset + shape.rows].to_vec();
        offset += shape.rows;
        layers.push(Layer {
            shape,
            weights,
            bias,
        });
    }
    Ok(layers)
}

/// Projected gradient descent on the simplex that keeps the best iterate.
///
/// `eval` returns `(objective, gradient)`. A later iterate replaces the
/// incumbent only when it improves the objective by more than a relative
/// 1e-12, so objectives that are flat up to rounding return `init`.
pub fn simplex_descent<F>(init: ProbVector, steps: usize, lr: f64, mut eval: F) -> Result<(ProbVector, f64)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut current = init;
    let (mut value, mut grad) = eval(current.as_slice())?;
    let mut best = (current.clone(), value);
    for _ in 0..steps {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical("non-finite gradient on the simplex".into()));
        }
        let stepped: Vec<f64> = current
            .as_slice()
            .iter()
            .zip(&grad)
            .map(|(a, g)| a - lr * g)
            .collect();
        current = project_to_simplex(&stepped)?;
        (value, grad) = eval(current.as_slice())?;
        if value < best.1 - 1e-12 * (1.0 + best.1.abs()) {
            best = (current.clone(), value);
        }
    }
    Ok(best)
}
