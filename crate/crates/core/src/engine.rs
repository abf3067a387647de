//! Federated training loop: personalized aggregation, the three scheme
//! flows, per-round metrics, α timing and communication accounting.

use crate::cdiv::{cdiv_matrix, coalitions_to_alpha, optimize_coalitions, ClassifierConfig, CoalitionCost};
use crate::data::{ClientData, Dataset};
use crate::divergence::{pfedjs_alpha_matrix, JsConfig};
use crate::error::{invalid, Error, Result};
use crate::graph::{pfedgraph_round, GraphConfig, LossBatch};
use crate::hypernet::{ce_alpha_matrix, hn_train, HnTrainConfig, HyperNetwork};
use crate::math::{CollaborationMatrix, ParamVector, ProbVector};
use crate::model::{evaluate_params, local_train, MlpModel, SgdState};
use crate::seed;
use crate::shapley::{pfedsv_round, RelevanceState};
use crate::sketch::{global_sketch, make_lsh, sample_clients, selection_probabilities, sketch_dataset};
use rayon::prelude::*;
use std::time::Instant;

/// Largest distance from the simplex accepted by aggregation.
pub const AGGREGATION_TOL: f64 = 1e-6;

/// Bytes per transmitted parameter.
pub const BYTES_PER_PARAM: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    PFedGraph,
    PFedSv,
    PFedJs,
    FedCollab,
    Race,
    Ce,
    /// Uniform global averaging of all clients, evaluated without fine-tuning.
    FedAvg,
}

/// How a scheme obtains its collaboration weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeFlow {
    PrecomputedAlpha,
    PerRoundAlpha,
    GlobalSampled,
}

impl Scheme {
    /// The six compared schemes, in report order.
    pub const ALL: [Scheme; 6] = [
        Scheme::PFedGraph,
        Scheme::PFedSv,
        Scheme::PFedJs,
        Scheme::FedCollab,
        Scheme::Race,
        Scheme::Ce,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::PFedGraph => "pfedgraph",
            Scheme::PFedSv => "pfedsv",
            Scheme::PFedJs => "pfedjs",
            Scheme::FedCollab => "fedcollab",
            Scheme::Race => "race",
            Scheme::Ce => "ce",
            Scheme::FedAvg => "fedavg",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        let s = s.trim().to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .chain([Scheme::FedAvg])
            .find(|x| x.id() == s)
    }

    pub fn flow(self) -> SchemeFlow {
        match self {
            Scheme::PFedJs | Scheme::FedCollab | Scheme::Ce => SchemeFlow::PrecomputedAlpha,
            Scheme::PFedSv | Scheme::PFedGraph => SchemeFlow::PerRoundAlpha,
            Scheme::Race | Scheme::FedAvg => SchemeFlow::GlobalSampled,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Where personalized models are tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Each client's own held-out test split.
    Local,
    /// One shared class-balanced test set.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceConfig {
    pub rows: usize,
    pub bits: usize,
    pub label_scale: f64,
    pub clients_per_round: usize,
    pub fine_tune_epochs: usize,
}

impl Default for RaceConfig {
    fn default() -> Self {
        Self {
            rows: 50,
            bits: 4,
            label_scale: 1.0,
            clients_per_round: 5,
            fine_tune_epochs: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvConfig {
    pub top_k: usize,
    pub eta: f64,
    pub self_weight: f64,
}

impl Default for SvConfig {
    fn default() -> Self {
        Self {
            top_k: 3,
            eta: 0.5,
            self_weight: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeConfig {
    pub train: HnTrainConfig,
    pub pref_steps: usize,
    pub pref_lr: f64,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            train: HnTrainConfig::default(),
            pref_steps: 300,
            pref_lr: 0.1,
        }
    }
}

/// Per-scheme hyperparameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SchemeParams {
    pub js: JsConfig,
    pub classifier: ClassifierConfig,
    pub coalition: CoalitionCost,
    pub race: RaceConfig,
    pub sv: SvConfig,
    pub graph: GraphConfig,
    pub ce: CeConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub hidden: Vec<usize>,
    pub eval: EvalMode,
    pub seed: u64,
    pub schemes: SchemeParams,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            rounds: 50,
            local_epochs: 10,
            batch_size: 64,
            learning_rate: 0.01,
            momentum: 0.9,
            hidden: vec![64],
            eval: EvalMode::Local,
            seed: 1,
            schemes: SchemeParams::default(),
        }
    }
}

/// Client data plus an optional shared test set.
#[derive(Debug, Clone)]
pub struct Federation {
    pub clients: Vec<ClientData>,
    pub global_test: Option<Dataset>,
}

impl Federation {
    pub fn new(clients: Vec<ClientData>, global_test: Option<Dataset>) -> Result<Self> {
        let first = clients.first().ok_or_else(|| invalid("federation without clients"))?;
        let (d, c) = (first.train.dim(), first.train.num_classes());
        let shaped = |ds: &Dataset| ds.dim() == d && ds.num_classes() == c;
        if clients.iter().any(|cl| !shaped(&cl.train) || !shaped(&cl.validation) || !shaped(&cl.test)) {
            return Err(Error::ShapeMismatch("clients differ in feature or label space".into()));
        }
        if clients.iter().any(|cl| cl.train.is_empty()) {
            return Err(invalid("every client needs training data"));
        }
        if global_test.as_ref().is_some_and(|t| !shaped(t) || t.is_empty()) {
            return Err(invalid("global test set is empty or differently shaped"));
        }
        Ok(Self { clients, global_test })
    }

    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn dim(&self) -> usize {
        self.clients[0].train.dim()
    }

    pub fn num_classes(&self) -> usize {
        self.clients[0].train.num_classes()
    }

    pub fn train_sizes(&self) -> Vec<usize> {
        self.clients.iter().map(|c| c.train.len()).collect()
    }

    fn train_splits(&self) -> Vec<Dataset> {
        self.clients.iter().map(|c| c.train.clone()).collect()
    }

    fn test_set(&self, client: usize, mode: EvalMode) -> Result<&Dataset> {
        match mode {
            EvalMode::Local => Ok(&self.clients[client].test),
            EvalMode::Global => self
                .global_test
                .as_ref()
                .ok_or_else(|| invalid("global evaluation requested without a global test set")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClientMetric {
    pub client: usize,
    pub accuracy: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub per_client: Vec<ClientMetric>,
    pub mean_accuracy: f64,
}

impl RoundMetrics {
    fn new(round: usize, per_client: Vec<ClientMetric>) -> Self {
        let mean_accuracy = per_client.iter().map(|m| m.accuracy).sum::<f64>() / per_client.len() as f64;
        Self {
            round,
            per_client,
            mean_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub scheme: Scheme,
    pub alpha_compute_seconds: f64,
    pub comm_bytes_total: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scheme: Scheme,
    pub metrics: Vec<RoundMetrics>,
    pub efficiency: EfficiencyReport,
    /// The α used in the last round (personalized flows only).
    pub final_alpha: Option<CollaborationMatrix>,
    /// Largest Shapley efficiency-axiom violation seen (pFedSV only).
    pub sv_efficiency_gap: Option<f64>,
}

impl RunOutput {
    pub fn final_accuracy(&self) -> f64 {
        self.metrics.last().map_or(0.0, |m| m.mean_accuracy)
    }
}

/// `Σ_j α_j w_j`. Zero weights are skipped, so a one-hot row returns its
/// model bit for bit.
pub fn aggregate_personalized(row: &[f64], models: &[ParamVector]) -> Result<ParamVector> {
    if row.len() != models.len() || models.is_empty() {
        return Err(invalid("α row length differs from the number of models"));
    }
    let sum: f64 = row.iter().sum();
    if row.iter().any(|a| !a.is_finite() || *a < -AGGREGATION_TOL) || (sum - 1.0).abs() > AGGREGATION_TOL {
        return Err(invalid(format!("α row is off the simplex (sum {sum})")));
    }
    let first = &models[0];
    if models.iter().any(|m| !m.same_layout(first)) {
        return Err(Error::ShapeMismatch("models differ in layout".into()));
    }
    let mut flat = vec![0.0; first.len()];
    for (a, m) in row.iter().zip(models) {
        if *a <= 0.0 {
            continue;
        }
        for (o, w) in flat.iter_mut().zip(&m.flat) {
            *o += a * w;
        }
    }
    ParamVector::new(flat, first.shapes.clone())
}

/// Inputs of the analytical communication model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommParams {
    pub num_clients: u64,
    pub params_per_model: u64,
    pub rounds: u64,
    /// Peers downloaded per pFedSV client, or clients sampled per RACE round.
    pub top_k: u64,
    pub hn_steps: u64,
    /// Parameters of one pairwise C-divergence classifier.
    pub classifier_params: u64,
    /// `R · B` sketch cells.
    pub sketch_cells: u64,
}

/// Total bytes moved between clients and server over a run.
///
/// * base flow: one upload and one download per client per round,
///   `2·N·T·P·4`; pFedGraph, pFedJS and FedAvg use exactly this.
/// * pFedSV: one upload and `K` peer downloads, `N·T·(1+K)·P·4`.
/// * RACE: `K` sampled clients move models, `2·K·P·4·T`, plus one sketch
///   upload per client, `N·R·B·4`.
/// * FedCollab: base flow plus one classifier exchange per ordered client
///   pair, `N·(N−1)·(d+C+1)·4`.
/// * CE: base flow plus hypernetwork-sized payloads, `P·(N+1)` parameters
///   up and down per client for every round and every hypernetwork step.
pub fn account_communication(scheme: Scheme, p: &CommParams) -> u64 {
    let b = BYTES_PER_PARAM;
    let (n, pm, t) = (p.num_clients, p.params_per_model, p.rounds);
    let base = 2 * n * t * pm * b;
    let hn = pm * (n + 1);
    match scheme {
        Scheme::PFedGraph | Scheme::PFedJs | Scheme::FedAvg => base,
        Scheme::PFedSv => n * t * (1 + p.top_k) * pm * b,
        Scheme::Race => 2 * p.top_k * pm * b * t + n * p.sketch_cells * b,
        Scheme::FedCollab => base + n * n.saturating_sub(1) * p.classifier_params * b,
        Scheme::Ce => base + t * n * 2 * hn * b + p.hn_steps * n * 2 * hn * b,
    }
}

/// Communication inputs for a scheme under a config and federation.
pub fn comm_params(scheme: Scheme, fed: &Federation, cfg: &EngineConfig, params_per_model: usize) -> CommParams {
    let n = fed.num_clients();
    let s = &cfg.schemes;
    let top_k = match scheme {
        Scheme::PFedSv => s.sv.top_k,
        Scheme::Race => s.race.clients_per_round,
        Scheme::FedAvg => n,
        _ => 0,
    };
    CommParams {
        num_clients: n as u64,
        params_per_model: params_per_model as u64,
        rounds: cfg.rounds as u64,
        top_k: top_k as u64,
        hn_steps: s.ce.train.steps as u64,
        classifier_params: ClassifierConfig::param_count(fed.dim(), fed.num_classes()) as u64,
        sketch_cells: (s.race.rows << s.race.bits) as u64,
    }
}

fn check_config(cfg: &EngineConfig, fed: &Federation) -> Result<()> {
    if cfg.rounds == 0 || cfg.local_epochs == 0 || cfg.batch_size == 0 {
        return Err(invalid("rounds, local epochs and batch size must be >= 1"));
    }
    if fed.num_clients() < 2 {
        return Err(invalid("a federation needs at least two clients"));
    }
    if cfg.eval == EvalMode::Global && fed.global_test.is_none() {
        return Err(invalid("global evaluation requested without a global test set"));
    }
    Ok(())
}

fn initial_model(fed: &Federation, cfg: &EngineConfig) -> Result<ParamVector> {
    Ok(MlpModel::init(fed.dim(), &cfg.hidden, fed.num_classes(), seed::derive(cfg.seed, &[seed::INIT]))?.into_params())
}

/// `epochs` of local SGD from `start` with a fresh optimizer.
pub fn train_client(start: ParamVector, data: &Dataset, cfg: &EngineConfig, epochs: usize, seed: u64) -> Result<ParamVector> {
    let mut model = MlpModel::from_params(start)?;
    let mut sgd = SgdState::new(cfg.learning_rate, cfg.momentum, model.params().len())?;
    local_train(&mut model, data, epochs, cfg.batch_size, &mut sgd, seed)?;
    Ok(model.into_params())
}

fn evaluate_all(fed: &Federation, models: &[ParamVector], mode: EvalMode) -> Result<Vec<ClientMetric>> {
    models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let r = evaluate_params(m, fed.test_set(i, mode)?)?;
            Ok(ClientMetric {
                client: i,
                accuracy: r.accuracy,
                loss: r.mean_loss,
            })
        })
        .collect()
}

fn train_seed(cfg: &EngineConfig, round: usize, client: usize) -> u64 {
    seed::derive(cfg.seed, &[seed::TRAIN, round as u64, client as u64])
}

/// Where per-round α comes from.
#[derive(Debug, Clone)]
pub enum AlphaSource {
    Fixed(CollaborationMatrix),
    Graph {
        batches: Vec<LossBatch>,
        previous: Option<CollaborationMatrix>,
    },
    Shapley(RelevanceState),
}

/// Round state of a personalized flow.
#[derive(Debug, Clone)]
pub struct PersonalizedState<'a> {
    pub fed: &'a Federation,
    pub cfg: &'a EngineConfig,
    pub models: Vec<ParamVector>,
    pub round: usize,
    pub alpha: AlphaSource,
    pub alpha_seconds: f64,
    pub last_alpha: Option<CollaborationMatrix>,
    pub sv_efficiency_gap: f64,
}

impl<'a> PersonalizedState<'a> {
    pub fn new(fed: &'a Federation, cfg: &'a EngineConfig, models: Vec<ParamVector>, alpha: AlphaSource) -> Result<Self> {
        check_config(cfg, fed)?;
        if models.len() != fed.num_clients() {
            return Err(invalid("one model per client"));
        }
        Ok(Self {
            fed,
            cfg,
            models,
            round: 0,
            alpha,
            alpha_seconds: 0.0,
            last_alpha: None,
            sv_efficiency_gap: 0.0,
        })
    }
}

/// Snapshot, α, personalized aggregation, local training, evaluation.
pub fn run_round_personalized(state: &mut PersonalizedState<'_>) -> Result<RoundMetrics> {
    let cfg = state.cfg;
    let fed = state.fed;
    state.round += 1;
    let round = state.round;
    let snapshot = state.models.clone();

    let started = Instant::now();
    let alpha = match &mut state.alpha {
        AlphaSource::Fixed(a) => a.clone(),
        AlphaSource::Graph { batches, previous } => {
            let a = pfedgraph_round(&snapshot, batches, &cfg.schemes.graph, previous.as_ref())?;
            *previous = Some(a.clone());
            a
        }
        AlphaSource::Shapley(relevance) => {
            let validations: Vec<Dataset> = fed.clients.iter().map(|c| c.validation.clone()).collect();
            let out = pfedsv_round(relevance, &snapshot, &validations, cfg.schemes.sv.self_weight)?;
            for r in &out.results {
                let gap = r.efficiency_gap();
                if gap > 1e-9 {
                    return Err(Error::Numerical(format!("Shapley efficiency violated by {gap}")));
                }
                state.sv_efficiency_gap = state.sv_efficiency_gap.max(gap);
            }
            out.alpha
        }
    };
    if !matches!(state.alpha, AlphaSource::Fixed(_)) {
        state.alpha_seconds += started.elapsed().as_secs_f64();
    }
    if alpha.size() != fed.num_clients() {
        return Err(invalid("α size differs from the number of clients"));
    }

    let trained = (0..fed.num_clients())
        .into_par_iter()
        .map(|i| {
            let start = aggregate_personalized(alpha.row(i).as_slice(), &snapshot)?;
            train_client(start, &fed.clients[i].train, cfg, cfg.local_epochs, train_seed(cfg, round, i))
        })
        .collect::<Result<Vec<_>>>()?;
    state.models = trained;
    state.last_alpha = Some(alpha);
    Ok(RoundMetrics::new(round, evaluate_all(fed, &state.models, cfg.eval)?))
}

/// Sampled global training: each round `k` clients drawn from `probs` train
/// from the global model, which becomes their mean. After the last round
/// every client fine-tunes it for `fine_tune_epochs` and is evaluated; earlier
/// rounds evaluate the global model.
pub fn run_sampled_flow(
    fed: &Federation,
    cfg: &EngineConfig,
    probs: &ProbVector,
    k: usize,
    fine_tune_epochs: usize,
) -> Result<Vec<RoundMetrics>> {
    check_config(cfg, fed)?;
    let n = fed.num_clients();
    if probs.len() != n || k == 0 || k > n {
        return Err(invalid(format!("cannot sample {k} of {n} clients")));
    }
    let mut global = initial_model(fed, cfg)?;
    let mut metrics = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        let chosen = sample_clients(probs, k, seed::derive(cfg.seed, &[seed::SAMPLE, round as u64]))?;
        let trained = chosen
            .par_iter()
            .map(|&i| train_client(global.clone(), &fed.clients[i].train, cfg, cfg.local_epochs, train_seed(cfg, round, i)))
            .collect::<Result<Vec<_>>>()?;
        global = aggregate_personalized(&vec![1.0 / k as f64; k], &trained)?;
        let personalized = if round == cfg.rounds && fine_tune_epochs > 0 {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let s = seed::derive(cfg.seed, &[seed::TRAIN, u64::MAX, i as u64]);
                    train_client(global.clone(), &fed.clients[i].train, cfg, fine_tune_epochs, s)
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![global.clone(); n]
        };
        metrics.push(RoundMetrics::new(round, evaluate_all(fed, &personalized, cfg.eval)?));
    }
    Ok(metrics)
}

/// Sketch-based selection probabilities, computed once.
pub fn race_probabilities(fed: &Federation, cfg: &EngineConfig) -> Result<ProbVector> {
    let r = &cfg.schemes.race;
    let lsh = make_lsh(r.rows, r.bits, fed.dim(), fed.num_classes(), r.label_scale, cfg.seed)?;
    let sketches = fed
        .clients
        .iter()
        .map(|c| sketch_dataset(&c.train, &lsh))
        .collect::<Result<Vec<_>>>()?;
    selection_probabilities(&global_sketch(&sketches)?, &sketches)
}

/// RACE: one-time sketches, then the sampled flow with fine-tuning.
pub fn run_race_flow(fed: &Federation, cfg: &EngineConfig) -> Result<(Vec<RoundMetrics>, f64)> {
    let started = Instant::now();
    let probs = race_probabilities(fed, cfg)?;
    let seconds = started.elapsed().as_secs_f64();
    let r = &cfg.schemes.race;
    let metrics = run_sampled_flow(fed, cfg, &probs, r.clients_per_round, r.fine_tune_epochs)?;
    Ok((metrics, seconds))
}

/// The precomputed α of pFedJS, FedCollab or CE.
pub fn precompute_alpha(scheme: Scheme, fed: &Federation, cfg: &EngineConfig) -> Result<CollaborationMatrix> {
    let s = &cfg.schemes;
    match scheme {
        Scheme::PFedJs => pfedjs_alpha_matrix(&fed.clients, &s.js),
        Scheme::FedCollab => {
            let d = cdiv_matrix(&fed.clients, &s.classifier, seed::derive(cfg.seed, &[seed::CDIV]))?;
            let m = fed.train_sizes();
            let structure = optimize_coalitions(&d, &m, &s.coalition)?;
            coalitions_to_alpha(&structure, &m)
        }
        Scheme::Ce => {
            let mut hn = HyperNetwork::new(&initial_model(fed, cfg)?, fed.num_clients(), cfg.seed)?;
            let train = fed.train_splits();
            hn_train(&mut hn, &train, &s.ce.train, cfg.seed)?;
            Ok(ce_alpha_matrix(&hn, &train, s.ce.pref_steps, s.ce.pref_lr)?.alpha)
        }
        other => Err(invalid(format!("{other} has no precomputed α"))),
    }
}

/// Runs one scheme end to end.
pub fn run_scheme(scheme: Scheme, fed: &Federation, cfg: &EngineConfig) -> Result<RunOutput> {
    check_config(cfg, fed)?;
    let n = fed.num_clients();
    let init = initial_model(fed, cfg)?;
    let p = init.len();
    let mut final_alpha = None;
    let mut sv_gap = None;
    let (metrics, seconds) = match scheme.flow() {
        SchemeFlow::GlobalSampled => {
            if scheme == Scheme::Race {
                run_race_flow(fed, cfg)?
            } else {
                (run_sampled_flow(fed, cfg, &ProbVector::uniform(n), n, 0)?, 0.0)
            }
        }
        SchemeFlow::PrecomputedAlpha | SchemeFlow::PerRoundAlpha => {
            let started = Instant::now();
            let source = match scheme {
                Scheme::PFedGraph => {
                    let batches = fed
                        .clients
                        .iter()
                        .enumerate()
                        .map(|(i, c)| LossBatch::draw(&c.validation, cfg.schemes.graph.loss_batch, seed::derive(cfg.seed, &[i as u64])))
                        .collect::<Result<Vec<_>>>()?;
                    AlphaSource::Graph { batches, previous: None }
                }
                Scheme::PFedSv => {
                    let sv = &cfg.schemes.sv;
                    AlphaSource::Shapley(RelevanceState::new(n, sv.eta, sv.top_k)?)
                }
                _ => AlphaSource::Fixed(precompute_alpha(scheme, fed, cfg)?),
            };
            let setup = if matches!(source, AlphaSource::Fixed(_)) {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            };
            let mut state = PersonalizedState::new(fed, cfg, vec![init.clone(); n], source)?;
            let metrics = (0..cfg.rounds)
                .map(|_| run_round_personalized(&mut state))
                .collect::<Result<Vec<_>>>()?;
            if scheme == Scheme::PFedSv {
                sv_gap = Some(state.sv_efficiency_gap);
            }
            final_alpha = state.last_alpha;
            (metrics, setup + state.alpha_seconds)
        }
    };
    Ok(RunOutput {
        scheme,
        metrics,
        efficiency: EfficiencyReport {
            scheme,
            alpha_compute_seconds: seconds,
            comm_bytes_total: account_communication(scheme, &comm_params(scheme, fed, cfg, p)),
        },
        final_alpha,
        sv_efficiency_gap: sv_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_clients, generate_synthetic, PartitionSpec, Strategy};
    use crate::math::LayerShape;

    fn vectors(points: &[&[f64]]) -> Vec<ParamVector> {
        let shapes = vec![LayerShape::new(1, points[0].len() - 1)];
        points.iter().map(|p| ParamVector::new(p.to_vec(), shapes.clone()).unwrap()).collect()
    }

    #[test]
    fn aggregation_examples() {
        let m = vectors(&[&[1.0, 2.0, 3.0], &[3.0, -2.0, 0.1]]);
        assert_eq!(aggregate_personalized(&[1.0, 0.0], &m).unwrap(), m[0]);
        assert_eq!(aggregate_personalized(&[0.5, 0.5], &m).unwrap().flat, vec![2.0, 0.0, 1.55]);
        assert!(aggregate_personalized(&[0.6, 0.6], &m).is_err());
        assert!(aggregate_personalized(&[1.0], &m).is_err());
    }

    fn comm(n: u64, k: u64) -> CommParams {
        CommParams {
            num_clients: n,
            params_per_model: 1000,
            rounds: 50,
            top_k: k,
            hn_steps: 2000,
            classifier_params: 27,
            sketch_cells: 800,
        }
    }

    #[test]
    fn communication_model() {
        let c = comm(10, 9);
        assert_eq!(account_communication(Scheme::PFedGraph, &c), 4_000_000);
        assert_eq!(account_communication(Scheme::PFedJs, &c), 4_000_000);
        assert_eq!(account_communication(Scheme::PFedSv, &c), 20_000_000);
        assert!(account_communication(Scheme::Ce, &c) > account_communication(Scheme::PFedSv, &c));
        assert!(account_communication(Scheme::FedCollab, &c) > account_communication(Scheme::PFedJs, &c));
    }

    #[test]
    fn scheme_ids_round_trip() {
        for s in Scheme::ALL.into_iter().chain([Scheme::FedAvg]) {
            assert_eq!(Scheme::parse(s.id()), Some(s));
        }
        assert_eq!(Scheme::parse("nope"), None);
    }

    fn small_fed(seed: u64) -> Federation {
        let ds = generate_synthetic(3, 4, 30, 1.0, seed).unwrap();
        let fd = build_clients(&ds, &PartitionSpec::new(Strategy::Iid, 3, seed)).unwrap();
        Federation::new(fd.clients, None).unwrap()
    }

    fn small_cfg() -> EngineConfig {
        EngineConfig {
            rounds: 2,
            local_epochs: 1,
            batch_size: 8,
            hidden: vec![5],
            ..EngineConfig::default()
        }
    }

    #[test]
    fn identity_alpha_is_isolated_training() {
        let fed = small_fed(1);
        let cfg = small_cfg();
        let init = initial_model(&fed, &cfg).unwrap();
        let mut state = PersonalizedState::new(&fed, &cfg, vec![init.clone(); 3], AlphaSource::Fixed(CollaborationMatrix::identity(3))).unwrap();
        run_round_personalized(&mut state).unwrap();
        run_round_personalized(&mut state).unwrap();
        for i in 0..3 {
            let mut m = init.clone();
            for round in 1..=2 {
                m = train_client(m, &fed.clients[i].train, &cfg, 1, train_seed(&cfg, round, i)).unwrap();
            }
            assert_eq!(m, state.models[i]);
        }
    }

    #[test]
    fn every_scheme_runs_and_is_deterministic() {
        let fed = small_fed(2);
        let mut cfg = small_cfg();
        cfg.schemes.ce.train.steps = 20;
        cfg.schemes.ce.pref_steps = 10;
        cfg.schemes.sv.top_k = 2;
        cfg.schemes.race.clients_per_round = 2;
        for s in Scheme::ALL.into_iter().chain([Scheme::FedAvg]) {
            let a = run_scheme(s, &fed, &cfg).unwrap();
            let b = run_scheme(s, &fed, &cfg).unwrap();
            assert_eq!(a.metrics, b.metrics, "{s}");
            assert_eq!(a.metrics.len(), 2);
            assert!(a.efficiency.alpha_compute_seconds >= 0.0);
        }
    }
}
