//! Experiment configuration: a flat `key = value` text format with dotted
//! per-scheme namespaces. `#` starts a comment.
//!
//! ```text
//! scheme = pfedgraph, race
//! partition = pdir:0.5
//! seed = 1, 2, 3
//! rounds = 20
//! race.R = 50
//! ```

use crate::data::Strategy;
use crate::divergence::Space;
use crate::engine::{EngineConfig, EvalMode, Scheme};
use crate::error::{Error, Result};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Where the pooled dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Gaussian class clusters; see [`crate::data::generate_synthetic`].
    Synthetic {
        classes: usize,
        dim: usize,
        per_class: usize,
        spread: f64,
        /// Samples per class in the shared test set used by global evaluation.
        test_per_class: usize,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: Option<PathBuf>,
        test_labels: Option<PathBuf>,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            classes: 10,
            dim: 16,
            per_class: 100,
            spread: 1.0,
            test_per_class: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub schemes: Vec<Scheme>,
    pub partition: Strategy,
    pub data: DataSource,
    pub num_clients: usize,
    /// Dirichlet draws leaving a client with fewer samples are redrawn.
    pub min_client_samples: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Everything the engine needs except the seed, which is set per run.
    pub engine: EngineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schemes: Scheme::ALL.to_vec(),
            partition: Strategy::Iid,
            data: DataSource::default(),
            num_clients: 10,
            min_client_samples: 3,
            seeds: vec![1],
            out: PathBuf::from("results"),
            engine: EngineConfig::default(),
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| err(line, format!("`{key}`: cannot parse `{value}`")))
}

fn at_least<T: FromStr + PartialOrd + std::fmt::Display + Copy>(line: usize, key: &str, value: &str, min: T) -> Result<T> {
    let v: T = num(line, key, value)?;
    if v < min {
        return Err(err(line, format!("`{key}` must be >= {min}, got {value}")));
    }
    Ok(v)
}

fn positive(line: usize, key: &str, value: &str) -> Result<f64> {
    let v: f64 = num(line, key, value)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(err(line, format!("`{key}` must be > 0, got {value}")));
    }
    Ok(v)
}

fn nonneg(line: usize, key: &str, value: &str) -> Result<f64> {
    let v: f64 = num(line, key, value)?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(err(line, format!("`{key}` must be >= 0, got {value}")));
    }
    Ok(v)
}

fn unit(line: usize, key: &str, value: &str, open_top: bool) -> Result<f64> {
    let v: f64 = num(line, key, value)?;
    let ok = v >= 0.0 && if open_top { v < 1.0 } else { v <= 1.0 };
    if !ok {
        let range = if open_top { "[0, 1)" } else { "[0, 1]" };
        return Err(err(line, format!("`{key}` must lie in {range}, got {value}")));
    }
    Ok(v)
}

fn boolean(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(err(line, format!("`{key}` must be true or false, got {value}"))),
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split([',', ' ']).map(str::trim).filter(|s| !s.is_empty())
}

/// `all` or a comma-separated list of scheme ids.
pub fn parse_schemes(value: &str) -> std::result::Result<Vec<Scheme>, String> {
    if value.trim() == "all" {
        return Ok(Scheme::ALL.to_vec());
    }
    let mut out = Vec::new();
    for s in list(value) {
        let scheme = Scheme::parse(s).ok_or_else(|| format!("unknown scheme `{s}`"))?;
        if !out.contains(&scheme) {
            out.push(scheme);
        }
    }
    if out.is_empty() {
        return Err("no scheme given".into());
    }
    Ok(out)
}

/// `iid`, `c<k>`, `pdir:<ε>`, `gau:<σ>`, `qdir:<ε>`,
/// `mix_label_feature:<ε>:<σ>` or `mix_feature_quantity:<ε>:<σ>`.
pub fn parse_partition(value: &str) -> std::result::Result<Strategy, String> {
    let value = value.trim();
    let parts: Vec<&str> = value.split(':').collect();
    let real = |s: &str| -> std::result::Result<f64, String> {
        let v: f64 = s.parse().map_err(|_| format!("cannot parse `{s}` in partition `{value}`"))?;
        if !v.is_finite() || v < 0.0 {
            return Err(format!("partition parameter `{s}` must be finite and >= 0"));
        }
        Ok(v)
    };
    let conc = |s: &str| -> std::result::Result<f64, String> {
        let v = real(s)?;
        if v == 0.0 {
            return Err("Dirichlet concentration must be > 0".into());
        }
        Ok(v)
    };
    match parts.as_slice() {
        ["iid"] => Ok(Strategy::Iid),
        [c] if c.starts_with('c') && c.len() > 1 => {
            let k: usize = c[1..].parse().map_err(|_| format!("cannot parse #C in `{value}`"))?;
            if k == 0 {
                return Err("#C must be >= 1".into());
            }
            Ok(Strategy::LabelQuantity { k })
        }
        ["pdir", e] => Ok(Strategy::LabelDirichlet { epsilon: conc(e)? }),
        ["qdir", e] => Ok(Strategy::QuantityDirichlet { epsilon: conc(e)? }),
        ["gau", s] => Ok(Strategy::FeatureNoise { sigma: real(s)? }),
        ["mix_label_feature", e, s] => Ok(Strategy::MixedLabelFeature {
            epsilon: conc(e)?,
            sigma: real(s)?,
        }),
        ["mix_feature_quantity", e, s] => Ok(Strategy::MixedFeatureQuantity {
            epsilon: conc(e)?,
            sigma: real(s)?,
        }),
        _ => Err(format!("unknown partition `{value}`")),
    }
}

fn parse_seeds(line: usize, value: &str) -> Result<Vec<u64>> {
    let seeds = list(value)
        .map(|s| num::<u64>(line, "seed", s))
        .collect::<Result<Vec<_>>>()?;
    if seeds.is_empty() {
        return Err(err(line, "`seed` needs at least one value"));
    }
    Ok(seeds)
}

impl ExperimentConfig {
    /// Parses config text on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut idx = IdxPaths::default();
        let mut synth = SynthParams::default();
        let mut source: Option<(usize, String)> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(line, format!("`{key}` has no value")));
            }
            match key {
                "data.source" => source = Some((line, value.to_string())),
                "data.classes" => synth.classes = at_least(line, key, value, 2)?,
                "data.dim" => synth.dim = at_least(line, key, value, 2)?,
                "data.per_class" => synth.per_class = at_least(line, key, value, 2)?,
                "data.spread" => synth.spread = nonneg(line, key, value)?,
                "data.test_per_class" => synth.test_per_class = at_least(line, key, value, 1)?,
                "data.train_images" => idx.train_images = Some(PathBuf::from(value)),
                "data.train_labels" => idx.train_labels = Some(PathBuf::from(value)),
                "data.test_images" => idx.test_images = Some(PathBuf::from(value)),
                "data.test_labels" => idx.test_labels = Some(PathBuf::from(value)),
                _ => cfg.set(line, key, value)?,
            }
        }
        cfg.data = match source.as_ref().map(|(l, s)| (*l, s.as_str())) {
            None | Some((_, "synthetic")) => DataSource::Synthetic {
                classes: synth.classes,
                dim: synth.dim,
                per_class: synth.per_class,
                spread: synth.spread,
                test_per_class: synth.test_per_class,
            },
            Some((line, "idx")) => {
                let need = |p: Option<PathBuf>, k: &str| p.ok_or_else(|| err(line, format!("idx data needs `{k}`")));
                if idx.test_images.is_some() != idx.test_labels.is_some() {
                    return Err(err(line, "give both or neither of `data.test_images` and `data.test_labels`"));
                }
                DataSource::Idx {
                    train_images: need(idx.train_images, "data.train_images")?,
                    train_labels: need(idx.train_labels, "data.train_labels")?,
                    test_images: idx.test_images,
                    test_labels: idx.test_labels,
                }
            }
            Some((line, other)) => return Err(err(line, format!("`data.source` must be synthetic or idx, got `{other}`"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| err(0, format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::parse_str(&text)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let e = &mut self.engine;
        let s = &mut e.schemes;
        match key {
            "scheme" => self.schemes = parse_schemes(value).map_err(|m| err(line, m))?,
            "partition" => self.partition = parse_partition(value).map_err(|m| err(line, m))?,
            "seed" => self.seeds = parse_seeds(line, value)?,
            "out" => self.out = PathBuf::from(value),
            "num_clients" => self.num_clients = at_least(line, key, value, 2)?,
            "min_client_samples" => self.min_client_samples = at_least(line, key, value, 3)?,
            "rounds" => e.rounds = at_least(line, key, value, 1)?,
            "local_epochs" => e.local_epochs = at_least(line, key, value, 1)?,
            "batch_size" => e.batch_size = at_least(line, key, value, 1)?,
            "learning_rate" => e.learning_rate = positive(line, key, value)?,
            "momentum" => e.momentum = unit(line, key, value, true)?,
            "hidden" => {
                e.hidden = list(value)
                    .map(|v| at_least(line, key, v, 1))
                    .collect::<Result<Vec<usize>>>()?
            }
            "eval" => {
                e.eval = match value {
                    "local" => EvalMode::Local,
                    "global" => EvalMode::Global,
                    _ => return Err(err(line, format!("`eval` must be local or global, got `{value}`"))),
                }
            }
            "pfedjs.space" => {
                s.js.space = match value {
                    "label" => Space::Label,
                    "joint" => Space::Joint,
                    _ => return Err(err(line, format!("`{key}` must be label or joint, got `{value}`"))),
                }
            }
            "pfedjs.bins" => s.js.feature_bins = at_least(line, key, value, 2)?,
            "pfedjs.q1" => s.js.q1 = positive(line, key, value)?,
            "pfedjs.q2" => s.js.q2 = positive(line, key, value)?,
            "pfedjs.steps" => s.js.solver_steps = at_least(line, key, value, 1)?,
            "pfedjs.lr" => s.js.solver_lr = positive(line, key, value)?,
            "fedcollab.q1" => s.coalition.q1 = positive(line, key, value)?,
            "fedcollab.q2" => s.coalition.q2 = positive(line, key, value)?,
            "fedcollab.weight_by_beta" => s.coalition.weight_by_beta = boolean(line, key, value)?,
            "fedcollab.steps" => s.classifier.steps = at_least(line, key, value, 1)?,
            "fedcollab.lr" => s.classifier.learning_rate = positive(line, key, value)?,
            "fedcollab.batch" => s.classifier.batch_pairs = at_least(line, key, value, 1)?,
            "race.R" => s.race.rows = at_least(line, key, value, 1)?,
            "race.p" => {
                s.race.bits = at_least(line, key, value, 1)?;
                if s.race.bits > 24 {
                    return Err(err(line, "`race.p` must be <= 24"));
                }
            }
            "race.gamma" => s.race.label_scale = nonneg(line, key, value)?,
            "race.K" => s.race.clients_per_round = at_least(line, key, value, 1)?,
            "race.fine_tune_epochs" => s.race.fine_tune_epochs = num(line, key, value)?,
            "pfedsv.K" => s.sv.top_k = at_least(line, key, value, 1)?,
            "pfedsv.eta" => s.sv.eta = unit(line, key, value, false)?,
            "pfedsv.self_weight" => s.sv.self_weight = unit(line, key, value, true)?,
            "pfedgraph.lambda" => s.graph.lambda = nonneg(line, key, value)?,
            "pfedgraph.inner_steps" => s.graph.inner_steps = at_least(line, key, value, 1)?,
            "pfedgraph.inner_lr" => s.graph.inner_lr = positive(line, key, value)?,
            "pfedgraph.loss_batch" => s.graph.loss_batch = at_least(line, key, value, 1)?,
            "ce.hn_steps" => s.ce.train.steps = at_least(line, key, value, 1)?,
            "ce.hn_lr" => s.ce.train.learning_rate = positive(line, key, value)?,
            "ce.hn_batch" => s.ce.train.batch_size = at_least(line, key, value, 1)?,
            "ce.pref_steps" => s.ce.pref_steps = at_least(line, key, value, 1)?,
            "ce.pref_lr" => s.ce.pref_lr = positive(line, key, value)?,
            _ => return Err(err(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Command-line overrides, applied after the file.
    pub fn apply_overrides(&mut self, scheme: Option<&str>, partition: Option<&str>, seeds: &[u64], out: Option<&Path>) -> Result<()> {
        if let Some(s) = scheme {
            self.schemes = parse_schemes(s).map_err(|m| err(0, format!("--scheme: {m}")))?;
        }
        if let Some(p) = partition {
            self.partition = parse_partition(p).map_err(|m| err(0, format!("--partition: {m}")))?;
        }
        if !seeds.is_empty() {
            self.seeds = seeds.to_vec();
        }
        if let Some(o) = out {
            self.out = o.to_path_buf();
        }
        self.validate()
    }

    /// Checks that span several keys.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_clients;
        let s = &self.engine.schemes;
        if self.schemes.contains(&Scheme::PFedSv) && s.sv.top_k > n - 1 {
            return Err(err(0, format!("`pfedsv.K` = {} exceeds num_clients - 1 = {}", s.sv.top_k, n - 1)));
        }
        if self.schemes.contains(&Scheme::PFedSv) && s.sv.top_k > crate::shapley::MAX_COALITION {
            return Err(err(0, "`pfedsv.K` exceeds the exact-enumeration limit of 10"));
        }
        if self.schemes.contains(&Scheme::Race) && s.race.clients_per_round > n {
            return Err(err(0, format!("`race.K` = {} exceeds num_clients = {n}", s.race.clients_per_round)));
        }
        if let (DataSource::Synthetic { classes, .. }, Strategy::LabelQuantity { k }) = (&self.data, self.partition) {
            if k > *classes {
                return Err(err(0, format!("#C = {k} exceeds the {classes} classes")));
            }
        }
        if self.engine.eval == EvalMode::Global {
            if let DataSource::Idx { test_images: None, .. } = self.data {
                return Err(err(0, "global evaluation on idx data needs `data.test_images` and `data.test_labels`"));
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct IdxPaths {
    train_images: Option<PathBuf>,
    train_labels: Option<PathBuf>,
    test_images: Option<PathBuf>,
    test_labels: Option<PathBuf>,
}

struct SynthParams {
    classes: usize,
    dim: usize,
    per_class: usize,
    spread: f64,
    test_per_class: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        match DataSource::default() {
            DataSource::Synthetic {
                classes,
                dim,
                per_class,
                spread,
                test_per_class,
            } => Self {
                classes,
                dim,
                per_class,
                spread,
                test_per_class,
            },
            DataSource::Idx { .. } => unreachable!(),
        }
    }
}
