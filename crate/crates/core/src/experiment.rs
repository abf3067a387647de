//! Runs a configured sweep of schemes over seeds and writes its reports.

use crate::config::{DataSource, ExperimentConfig};
use crate::data::{build_clients, generate_synthetic, load_idx, Dataset, PartitionSpec};
use crate::engine::{run_scheme, EngineConfig, EvalMode, Federation, RunOutput};
use crate::error::Result;
use crate::report::{push_efficiency, push_results, write_summary, SchemeSummary, Summary, EFFICIENCY_HEADER, RESULTS_HEADER};
use crate::seed;

/// Pooled data and, for global evaluation, the shared test set.
pub fn load_data(source: &DataSource, seed: u64) -> Result<(Dataset, Option<Dataset>)> {
    match source {
        DataSource::Synthetic {
            classes,
            dim,
            per_class,
            spread,
            test_per_class,
        } => {
            let pool = generate_synthetic(*classes, *dim, *per_class, *spread, seed::derive(seed, &[seed::DATA]))?;
            let test = generate_synthetic(*classes, *dim, *test_per_class, *spread, seed::derive(seed, &[seed::TEST_SET]))?;
            Ok((pool, Some(test)))
        }
        DataSource::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => {
            let pool = load_idx(train_images, train_labels)?;
            let test = match (test_images, test_labels) {
                (Some(i), Some(l)) => Some(load_idx(i, l)?),
                _ => None,
            };
            Ok((pool, test))
        }
    }
}

/// Partitioned federation for one seed.
pub fn build_federation(cfg: &ExperimentConfig, seed: u64) -> Result<Federation> {
    let (pool, test) = load_data(&cfg.data, seed)?;
    let spec = PartitionSpec {
        strategy: cfg.partition,
        num_clients: cfg.num_clients,
        seed: seed::derive(seed, &[seed::PARTITION]),
        min_client_samples: cfg.min_client_samples,
    };
    spec.validate(pool.num_classes())?;
    let data = build_clients(&pool, &spec)?;
    let test = match cfg.engine.eval {
        EvalMode::Global => test,
        EvalMode::Local => None,
    };
    Federation::new(data.clients, test)
}

pub fn engine_config(cfg: &ExperimentConfig, seed: u64) -> EngineConfig {
    EngineConfig {
        seed,
        ..cfg.engine.clone()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: Summary,
    /// `(seed, run)` in seed-major, configured-scheme order.
    pub runs: Vec<(u64, RunOutput)>,
    pub results_csv: String,
    pub efficiency_csv: String,
}

/// Runs every (seed, scheme) cell without writing anything.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let tag = cfg.partition.tag();
    let mut results_csv = format!("{RESULTS_HEADER}\n");
    let mut efficiency_csv = format!("{EFFICIENCY_HEADER}\n");
    let mut runs = Vec::new();
    for &s in &cfg.seeds {
        let fed = build_federation(cfg, s)?;
        let engine = engine_config(cfg, s);
        for &scheme in &cfg.schemes {
            log::info!("running {scheme} on {tag} with seed {s}");
            let out = run_scheme(scheme, &fed, &engine)?;
            push_results(&mut results_csv, scheme.id(), &tag, s, &out.metrics);
            push_efficiency(&mut efficiency_csv, &tag, s, &out.efficiency);
            log::info!("{scheme} seed {s}: final mean accuracy {:.4}", out.final_accuracy());
            runs.push((s, out));
        }
    }
    let schemes = cfg
        .schemes
        .iter()
        .map(|&scheme| {
            let finals = runs
                .iter()
                .filter(|(_, r)| r.scheme == scheme)
                .map(|(_, r)| r.final_accuracy())
                .collect();
            SchemeSummary::from_finals(scheme.id(), finals)
        })
        .collect();
    Ok(ExperimentOutcome {
        summary: Summary {
            partition: tag.clone(),
            category: cfg.partition.category().to_string(),
            seeds: cfg.seeds.clone(),
            rounds: cfg.engine.rounds,
            schemes,
        },
        runs,
        results_csv,
        efficiency_csv,
    })
}

/// Runs the sweep and writes `results.csv`, `efficiency.csv` and
/// `summary.json` into the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let outcome = execute(cfg)?;
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("results.csv"), &outcome.results_csv)?;
    std::fs::write(cfg.out.join("efficiency.csv"), &outcome.efficiency_csv)?;
    write_summary(&cfg.out.join("summary.json"), &outcome.summary)?;
    Ok(outcome)
}
