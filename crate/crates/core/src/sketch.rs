//! RACE: signed-random-projection LSH count sketches of client data, a
//! global sketch averaged from them, and inverse-distance client sampling.

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::math::{euclidean_distance, ProbVector};
use crate::seed;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;

/// Smallest distance used when inverting sketch distances.
pub const DISTANCE_FLOOR: f64 = 1e-6;

/// `R` hash functions, each the sign pattern of `p` Gaussian projections of
/// `z = (x, γ·onehot(y))`, read as a bin index in `[0, 2^p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LshFamily {
    rows: usize,
    bits: usize,
    dim: usize,
    num_classes: usize,
    label_scale: f64,
    seed: u64,
    /// Direction components stored column-major: entry `j · rows · bits + h`
    /// is coordinate `j` of direction `h = r · bits + k`.
    columns: Vec<f64>,
}

pub fn make_lsh(rows: usize, bits: usize, dim: usize, num_classes: usize, label_scale: f64, seed: u64) -> Result<LshFamily> {
    if rows == 0 || bits == 0 || dim == 0 || num_classes == 0 {
        return Err(invalid("LSH sizes must all be at least 1"));
    }
    if bits > 24 {
        return Err(invalid("at most 24 bits per hash"));
    }
    if !label_scale.is_finite() {
        return Err(invalid("label scale must be finite"));
    }
    let mut rng = seed::rng(seed::derive(seed, &[seed::LSH]));
    let width = dim + num_classes;
    let total = rows * bits;
    let mut columns = vec![0.0; width * total];
    for h in 0..total {
        for j in 0..width {
            columns[j * total + h] = StandardNormal.sample(&mut rng);
        }
    }
    Ok(LshFamily {
        rows,
        bits,
        dim,
        num_classes,
        label_scale,
        seed,
        columns,
    })
}

impl LshFamily {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bins(&self) -> usize {
        1 << self.bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Bin of `(x, y)` under hash function `r`.
    pub fn hash(&self, r: usize, x: &[f64], y: usize) -> usize {
        let total = self.rows * self.bits;
        let mut bin = 0;
        for k in 0..self.bits {
            let h = r * self.bits + k;
            let mut s = 0.0;
            for (j, xj) in x.iter().enumerate() {
                s += xj * self.columns[j * total + h];
            }
            s += self.label_scale * self.columns[(self.dim + y) * total + h];
            if s >= 0.0 {
                bin |= 1 << k;
            }
        }
        bin
    }

    /// Bins of `(x, y)` under every hash function, computed as one
    /// matrix-vector product. Agrees with [`LshFamily::hash`] bit for bit.
    fn hash_all(&self, x: &[f64], y: usize, proj: &mut [f64], out: &mut [usize]) {
        let total = self.rows * self.bits;
        proj.fill(0.0);
        for (j, xj) in x.iter().enumerate() {
            let col = &self.columns[j * total..][..total];
            for (p, c) in proj.iter_mut().zip(col) {
                *p += xj * c;
            }
        }
        let col = &self.columns[(self.dim + y) * total..][..total];
        for (p, c) in proj.iter_mut().zip(col) {
            *p += self.label_scale * c;
        }
        for (r, slot) in out.iter_mut().enumerate() {
            *slot = proj[r * self.bits..][..self.bits]
                .iter()
                .enumerate()
                .fold(0, |bin, (k, p)| if *p >= 0.0 { bin | 1 << k } else { bin });
        }
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if ds.dim() != self.dim || ds.num_classes() > self.num_classes {
            return Err(Error::ShapeMismatch(format!(
                "data is {}-dim with {} classes, hashes expect {} and {}",
                ds.dim(),
                ds.num_classes(),
                self.dim,
                self.num_classes
            )));
        }
        Ok(())
    }
}

/// `R × B` count matrix. Each row of the counts sums to `total`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaceSketch {
    rows: usize,
    bins: usize,
    counts: Vec<f64>,
    total: f64,
    seed: u64,
}

impl RaceSketch {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn get(&self, r: usize, b: usize) -> f64 {
        self.counts[r * self.bins + b]
    }

    /// Counts divided by the total, so every row sums to one.
    pub fn normalized(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c / self.total).collect()
    }

    fn same_shape(&self, other: &RaceSketch) -> bool {
        self.rows == other.rows && self.bins == other.bins
    }

    /// Elementwise sum, the sketch of the concatenated inputs.
    pub fn merge(&self, other: &RaceSketch) -> Result<RaceSketch> {
        if !self.same_shape(other) {
            return Err(invalid("cannot merge sketches of different shapes"));
        }
        Ok(RaceSketch {
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            total: self.total + other.total,
            ..self.clone()
        })
    }

    /// Euclidean distance between the normalized forms.
    pub fn distance(&self, other: &RaceSketch) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(invalid("cannot compare sketches of different shapes"));
        }
        euclidean_distance(&self.normalized(), &other.normalized())
    }

    /// Debug dump: a `race,R,B,total,seed` header line, then R rows of B counts.
    pub fn to_csv(&self) -> String {
        let mut out = format!("race,{},{},{},{}\n", self.rows, self.bins, self.total, self.seed);
        for r in 0..self.rows {
            let row = &self.counts[r * self.bins..][..self.bins];
            for (b, c) in row.iter().enumerate() {
                if b > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<RaceSketch> {
        let bad = |m: &str| Error::Format(format!("sketch csv: {m}"));
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split(',').collect();
        if header.len() != 5 || header[0] != "race" {
            return Err(bad("header must be race,R,B,total,seed"));
        }
        let rows: usize = header[1].parse().map_err(|_| bad("R"))?;
        let bins: usize = header[2].parse().map_err(|_| bad("B"))?;
        let total: f64 = header[3].parse().map_err(|_| bad("total"))?;
        let seed: u64 = header[4].parse().map_err(|_| bad("seed"))?;
        let mut counts = Vec::with_capacity(rows * bins);
        for line in lines.by_ref().take(rows) {
            let before = counts.len();
            for cell in line.split(',') {
                counts.push(cell.trim().parse::<f64>().map_err(|_| bad("count"))?);
            }
            if counts.len() - before != bins {
                return Err(bad("row width differs from B"));
            }
        }
        if counts.len() != rows * bins {
            return Err(bad("fewer than R rows"));
        }
        Ok(RaceSketch {
            rows,
            bins,
            counts,
            total,
            seed,
        })
    }
}

/// One pass over the split, incrementing one bin per hash function per sample.
pub fn sketch_dataset(split: &Dataset, lsh: &LshFamily) -> Result<RaceSketch> {
    if split.is_empty() {
        return Err(invalid("cannot sketch an empty split"));
    }
    lsh.check(split)?;
    let bins = lsh.bins();
    let mut counts = vec![0.0; lsh.rows * bins];
    let mut proj = vec![0.0; lsh.rows * lsh.bits];
    let mut hashed = vec![0; lsh.rows];
    for i in 0..split.len() {
        lsh.hash_all(split.row(i), split.label(i), &mut proj, &mut hashed);
        for (r, b) in hashed.iter().enumerate() {
            counts[r * bins + b] += 1.0;
        }
    }
    Ok(RaceSketch {
        rows: lsh.rows,
        bins,
        counts,
        total: split.len() as f64,
        seed: lsh.seed,
    })
}

/// Unweighted mean of the normalized client sketches.
pub fn global_sketch(sketches: &[RaceSketch]) -> Result<RaceSketch> {
    let first = sketches.first().ok_or_else(|| invalid("global sketch of no clients"))?;
    if sketches.iter().any(|s| !s.same_shape(first)) {
        return Err(invalid("client sketches differ in shape"));
    }
    let n = sketches.len() as f64;
    let mut counts = vec![0.0; first.counts.len()];
    for s in sketches {
        for (acc, c) in counts.iter_mut().zip(&s.counts) {
            *acc += c / s.total;
        }
    }
    counts.iter_mut().for_each(|c| *c /= n);
    Ok(RaceSketch {
        counts,
        total: 1.0,
        ..first.clone()
    })
}

/// `p_i ∝ 1 / max(d(GS, CS_i), DISTANCE_FLOOR)`.
pub fn selection_probabilities(global: &RaceSketch, clients: &[RaceSketch]) -> Result<ProbVector> {
    if clients.len() < 2 {
        return Err(invalid("selection needs at least two clients"));
    }
    let distances = clients
        .iter()
        .map(|c| global.distance(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(inverse_distance_probabilities(&distances))
}

pub fn inverse_distance_probabilities(distances: &[f64]) -> ProbVector {
    let inv: Vec<f64> = distances.iter().map(|d| 1.0 / d.max(DISTANCE_FLOOR)).collect();
    let sum: f64 = inv.iter().sum();
    ProbVector::new(inv.iter().map(|v| v / sum).collect()).unwrap_or_else(|_| ProbVector::uniform(distances.len()))
}

/// Weighted sampling of `k` distinct clients by sequential renormalized
/// draws. Returns ids in ascending order.
pub fn sample_clients(probs: &ProbVector, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = probs.len();
    if k > n {
        return Err(invalid(format!("cannot sample {k} of {n} clients")));
    }
    let mut rng = seed::rng(seed);
    let mut weights = probs.as_slice().to_vec();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let remaining: f64 = weights.iter().sum();
        let pick = if remaining > 0.0 {
            let u = rng.random::<f64>() * remaining;
            let mut acc = 0.0;
            let mut pick = None;
            for (j, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    acc += w;
                    pick = Some(j);
                    if u < acc {
                        break;
                    }
                }
            }
            pick
        } else {
            None
        };
        // zero-probability clients are only taken once positive mass is exhausted
        let j = pick.unwrap_or_else(|| (0..n).find(|j| !chosen.contains(j)).expect("k <= n"));
        chosen.push(j);
        weights[j] = 0.0;
    }
    chosen.sort_unstable();
    Ok(chosen)
}
