//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use hetbench::cdiv::{coalition_cost, optimize_coalitions, CDivMatrix, CoalitionCost, CoalitionStructure};
use hetbench::config::ExperimentConfig;
use hetbench::data::partition::apply;
use hetbench::data::{add_feature_noise, generate_synthetic, Dataset, PartitionSpec, Strategy};
use hetbench::divergence::{eq1_objective, js_divergence, solve_alpha_eq1, DiscreteDistribution, JsConfig};
use hetbench::engine::{run_scheme, RunOutput, Scheme};
use hetbench::experiment::{build_federation, engine_config, execute, run_experiment};
use hetbench::graph::{objective_and_grad, LossBatch};
use hetbench::hypernet::{scalarized_loss_and_grad, Batch, HyperNetwork};
use hetbench::math::ProbVector;
use hetbench::model::{loss_and_grad, MlpModel};
use hetbench::shapley::exact_shapley;
use hetbench::sketch::{make_lsh, sketch_dataset};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use std::time::Instant;

/// Shared desk-scale setup: 10 classes, d = 16, 100 samples per class per
/// client in the pool, N = 10, 20 rounds.
const BASE: &str = "
num_clients = 10
rounds = 20
data.classes = 10
data.dim = 16
data.per_class = 1000
data.spread = 2.0
";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn config(extra: &str) -> ExperimentConfig {
    ExperimentConfig::parse_str(&format!("{BASE}{extra}")).expect("acceptance config parses")
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn finals(runs: &[(u64, RunOutput)], scheme: Scheme) -> Vec<f64> {
    runs.iter()
        .filter(|(_, r)| r.scheme == scheme)
        .map(|(_, r)| r.final_accuracy())
        .collect()
}

/// Dirichlet(shape, ..., shape) point from normalized Gamma draws.
fn simplex_point(rng: &mut ChaCha8Rng, n: usize, shape: f64) -> Vec<f64> {
    let gamma = Gamma::new(shape, 1.0).expect("gamma");
    let raw: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn chance_collapse() -> Verdict {
    let start = Instant::now();
    let cfg = config("partition = c1\neval = global\nscheme = all\nseed = 1,2,3\n");
    let out = execute(&cfg).expect("run");
    let mut ok = true;
    let mut parts = Vec::new();
    for &s in Scheme::ALL.iter() {
        let f = finals(&out.runs, s);
        ok &= f.len() == 3 && f.iter().all(|a| (0.07..=0.13).contains(a));
        parts.push(format!("{s} {}", f.iter().map(|a| pct(*a)).collect::<Vec<_>>().join("/")));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(ok && secs < 600.0, format!("{} ({secs:.0}s)", parts.join(", ")))
}

fn dirichlet_ordering() -> Verdict {
    let start = Instant::now();
    let cfg = config("partition = pdir:0.5\neval = global\nscheme = pfedgraph,fedcollab\nseed = 1,2,3\n");
    let out = execute(&cfg).expect("run");
    let g = finals(&out.runs, Scheme::PFedGraph);
    let c = finals(&out.runs, Scheme::FedCollab);
    let wins = g.iter().zip(&c).filter(|(a, b)| a > b).count();
    let secs = start.elapsed().as_secs_f64();
    let pairs: Vec<String> = g.iter().zip(&c).map(|(a, b)| format!("{} vs {}", pct(*a), pct(*b))).collect();
    verdict(wins == 3 && secs < 900.0, format!("pFedGraph vs FedCollab per seed: {} ({secs:.0}s)", pairs.join(", ")))
}

fn personalization_beats_global() -> (Verdict, Verdict) {
    let mut cfg = config("partition = c2\neval = local\nseed = 1,2,3\n");
    cfg.schemes = Scheme::ALL.to_vec();
    cfg.schemes.push(Scheme::FedAvg);
    let out = execute(&cfg).expect("run");
    let base = finals(&out.runs, Scheme::FedAvg);
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for &s in Scheme::ALL.iter() {
        for (a, b) in finals(&out.runs, s).iter().zip(&base) {
            worst = worst.min(a - b);
            ok &= a - b >= 0.05;
        }
    }
    let gap = out
        .runs
        .iter()
        .filter_map(|(_, r)| r.sv_efficiency_gap)
        .fold(0.0, f64::max);
    let sv_runs = out.runs.iter().filter(|(_, r)| r.sv_efficiency_gap.is_some()).count();
    (
        verdict(
            ok,
            format!(
                "FedAvg {}, smallest margin {:.1} points",
                base.iter().map(|a| pct(*a)).collect::<Vec<_>>().join("/"),
                100.0 * worst
            ),
        ),
        verdict(sv_runs == 3 && gap <= 1e-9, format!("largest engine efficiency gap {gap:.2e} over {sv_runs} runs")),
    )
}

/// Smallest bound over a 0.05 grid of the 3-simplex.
fn grid_minimum(d: &[f64], m: &[usize], cfg: &JsConfig) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..=20 {
        for b in 0..=20 - a {
            let alpha = [a as f64 / 20.0, b as f64 / 20.0, (20 - a - b) as f64 / 20.0];
            best = best.min(eq1_objective(&alpha, d, m, cfg.q1, cfg.q2));
        }
    }
    best
}

fn solver_optimality() -> Verdict {
    let start = Instant::now();
    let cfg = JsConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let d = [0.0, rng.random_range(0.0..std::f64::consts::LN_2), rng.random_range(0.0..std::f64::consts::LN_2)];
        let m: Vec<usize> = (0..3).map(|_| rng.random_range(5..500)).collect();
        let row = solve_alpha_eq1(0, &d, &m, &cfg).expect("solve");
        let got = eq1_objective(row.as_slice(), &d, &m, cfg.q1, cfg.q2);
        worst = worst.max(got - grid_minimum(&d, &m, &cfg));
    }
    let sym = solve_alpha_eq1(1, &[0.0; 3], &[100; 3], &cfg).expect("solve");
    let dev = sym.as_slice().iter().map(|a| (a - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-3 && dev <= 1e-6 && secs < 60.0,
        format!("worst excess over grid {worst:.2e}, symmetric deviation {dev:.1e} ({secs:.1}s)"),
    )
}

fn permutation_shapley(k: usize, table: &[f64]) -> Vec<f64> {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut sv = vec![0.0; k];
    let mut count = 0.0;
    loop {
        let mut mask = 0;
        for &p in &perm {
            sv[p] += table[mask | 1 << p] - table[mask];
            mask |= 1 << p;
        }
        count += 1.0;
        // next lexicographic permutation
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
        let j = (i + 1..k).rev().find(|&j| perm[j] > perm[i]).expect("successor");
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    sv.iter().map(|v| v / count).collect()
}

fn shapley_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        for k in 1..=6 {
            let table: Vec<f64> = (0..1 << k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let members: Vec<usize> = (0..k).map(|p| 10 + 3 * p).collect();
            let sv = exact_shapley(&members, |s| {
                let mask = s.iter().map(|m| 1 << ((m - 10) / 3)).sum::<usize>();
                Ok(table[mask])
            })
            .expect("shapley");
            let oracle = permutation_shapley(k, &table);
            for (a, b) in sv.values.iter().zip(&oracle) {
                worst = worst.max((a - b).abs());
            }
            worst = worst.max(sv.efficiency_gap());
        }
    }
    verdict(worst <= 1e-9, format!("largest deviation from the permutation oracle {worst:.2e}"))
}

fn jsd_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut asym: f64 = 0.0;
    let mut in_range = true;
    for _ in 0..1000 {
        let n = rng.random_range(2..12);
        let p = DiscreteDistribution::new(ProbVector::new(simplex_point(&mut rng, n, 0.5)).expect("p"));
        let q = DiscreteDistribution::new(ProbVector::new(simplex_point(&mut rng, n, 0.5)).expect("q"));
        let a = js_divergence(&p, &q).expect("jsd");
        let b = js_divergence(&q, &p).expect("jsd");
        asym = asym.max((a - b).abs());
        in_range &= (0.0..=std::f64::consts::LN_2).contains(&a);
    }
    // 0.5·KL(p‖m) + 0.5·KL(q‖m) written out for p = (1, 0), q = (0.5, 0.5)
    let oracle = 0.5 * (1.0f64 / 0.75).ln() + 0.5 * (0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln());
    let p = DiscreteDistribution::new(ProbVector::new(vec![1.0, 0.0]).expect("p"));
    let q = DiscreteDistribution::new(ProbVector::new(vec![0.5, 0.5]).expect("q"));
    let v = js_divergence(&p, &q).expect("jsd");
    verdict(
        asym < 1e-12 && in_range && (v - oracle).abs() <= 1e-6 && (v - 0.215762).abs() <= 1e-6,
        format!("asymmetry {asym:.1e}, JSD((1,0),(0.5,0.5)) = {v:.6} vs oracle {oracle:.6}"),
    )
}

/// `n` samples whose labels follow `mix`, drawn from the synthetic class pool.
fn draw_mixture(pool: &Dataset, mix: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let by_class: Vec<Vec<usize>> = (0..pool.num_classes()).map(|c| pool.indices_of_label(c)).collect();
    let mut idx = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let c = mix
            .iter()
            .position(|p| {
                acc += p;
                u < acc
            })
            .unwrap_or(mix.len() - 1);
        idx.push(*by_class[c].choose(rng).expect("class present"));
    }
    pool.subset(&idx)
}

fn sketch_discrimination() -> Verdict {
    let pool = generate_synthetic(10, 16, 400, 2.0, 7).expect("pool");
    let mut wins = 0;
    let mut additive = true;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let p = simplex_point(&mut rng, 10, 1.0);
        let q = simplex_point(&mut rng, 10, 1.0);
        let a = draw_mixture(&pool, &p, 300, &mut rng);
        let a2 = draw_mixture(&pool, &p, 300, &mut rng);
        let b = draw_mixture(&pool, &q, 300, &mut rng);
        let lsh = make_lsh(50, 4, 16, 10, 1.0, trial).expect("lsh");
        let (sa, sa2, sb) = (
            sketch_dataset(&a, &lsh).expect("sketch"),
            sketch_dataset(&a2, &lsh).expect("sketch"),
            sketch_dataset(&b, &lsh).expect("sketch"),
        );
        if sa.distance(&sa2).expect("d") < sa.distance(&sb).expect("d") {
            wins += 1;
        }
        let joint = sketch_dataset(&a.concat(&b).expect("concat"), &lsh).expect("sketch");
        additive &= joint == sa.merge(&sb).expect("merge");
    }
    verdict(wins >= 95 && additive, format!("{wins}/100 trials closer within distribution, additivity exact: {additive}"))
}

/// Every set partition of `0..n` as canonical labels.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for label in 0..=next {
            prefix.push(label);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

fn fedcollab_oracle() -> Verdict {
    let cost = CoalitionCost::default();
    let partitions = set_partitions(4);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut matched = 0;
    for _ in 0..100 {
        let mut d = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            for j in i + 1..4 {
                let v = rng.random_range(0.0..1.0);
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        let d = CDivMatrix::new(d).expect("cdiv");
        let m: Vec<usize> = (0..4).map(|_| rng.random_range(10..1000)).collect();
        let best = partitions
            .iter()
            .map(|p| coalition_cost(&CoalitionStructure::from_assignment(p), &d, &m, &cost))
            .fold(f64::INFINITY, f64::min);
        let found = coalition_cost(&optimize_coalitions(&d, &m, &cost).expect("search"), &d, &m, &cost);
        if found <= best + 1e-12 {
            matched += 1;
        }
    }
    let planted: Vec<Vec<f64>> = (0..6)
        .map(|i| (0..6).map(|j| if (i < 3) == (j < 3) { 0.0 } else { 1.0 }).collect())
        .collect();
    let found = optimize_coalitions(&CDivMatrix::new(planted).expect("cdiv"), &[100; 6], &cost).expect("search");
    let recovered = found.coalitions() == vec![vec![0, 1, 2], vec![3, 4, 5]];
    verdict(
        partitions.len() == 15 && matched >= 80 && recovered,
        format!("{matched}/100 optimal on N=4, planted N=6 recovered: {recovered}"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn efficiency_orderings() -> Verdict {
    let start = Instant::now();
    let cfg = config("partition = pdir:0.5\neval = local\npfedsv.K = 9\nseed = 1\n");
    let fed = build_federation(&cfg, 1).expect("federation");
    let engine = engine_config(&cfg, 1);
    let timed = [Scheme::Race, Scheme::PFedJs, Scheme::FedCollab, Scheme::PFedSv];
    let mut seconds = Vec::new();
    let mut bytes = std::collections::BTreeMap::new();
    for &s in &timed {
        let runs: Vec<RunOutput> = (0..3).map(|_| run_scheme(s, &fed, &engine).expect("run")).collect();
        bytes.insert(s.id(), runs[0].efficiency.comm_bytes_total);
        seconds.push(median(runs.iter().map(|r| r.efficiency.alpha_compute_seconds).collect()));
    }
    for s in [Scheme::Ce, Scheme::PFedGraph] {
        bytes.insert(s.id(), run_scheme(s, &fed, &engine).expect("run").efficiency.comm_bytes_total);
    }
    let time_ok = seconds.windows(2).all(|w| w[0] < w[1]);
    let (ce, sv, graph, js) = (bytes["ce"], bytes["pfedsv"], bytes["pfedgraph"], bytes["pfedjs"]);
    let comm_ok = ce > sv && sv > graph && graph == js;
    let ratio = sv as f64 / graph as f64;
    let secs = start.elapsed().as_secs_f64();
    let times: Vec<String> = timed.iter().zip(&seconds).map(|(s, t)| format!("{s} {t:.4}s")).collect();
    verdict(
        time_ok && comm_ok && ratio == 5.0 && secs < 1200.0,
        format!(
            "median α time {} (required increasing); bytes CE {ce} > pFedSV {sv} > pFedGraph {graph} = pFedJS {js}; ratio {ratio} ({secs:.0}s)",
            times.join(", ")
        ),
    )
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn central<F: FnMut(&[f64]) -> f64>(x: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn random_data(rng: &mut ChaCha8Rng, n: usize, dim: usize, classes: usize) -> Dataset {
    let features = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    Dataset::new(features, dim, labels, classes).expect("dataset")
}

fn gradient_checks() -> Verdict {
    let (mut model_worst, mut graph_worst, mut w_worst, mut b_worst) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let data = random_data(&mut rng, 12, 5, 3);
        let model = MlpModel::init(5, &[6], 3, seed).expect("init").into_params();
        let (_, g) = loss_and_grad(&model, data.features(), data.labels()).expect("grad");
        let fd = central(&model.flat, 1e-5, |p| {
            let probe = hetbench::math::ParamVector::new(p.to_vec(), model.shapes.clone()).expect("params");
            loss_and_grad(&probe, data.features(), data.labels()).expect("loss").0
        });
        model_worst = model_worst.max(rel_err(&g, &fd));

        let models: Vec<Vec<f64>> = (0..4)
            .map(|k| MlpModel::init(5, &[6], 3, 1000 * seed + k).expect("init").into_params().flat)
            .collect();
        let refs: Vec<&[f64]> = models.iter().map(Vec::as_slice).collect();
        let batch = LossBatch::draw(&data, 8, seed).expect("batch");
        let alpha: Vec<f64> = {
            let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        };
        let (_, ga) = objective_and_grad(1, &alpha, &refs, 0.3, batch.loss_fn(&model)).expect("objective");
        let fda = central(&alpha, 1e-6, |a| objective_and_grad(1, a, &refs, 0.3, batch.loss_fn(&model)).expect("objective").0);
        graph_worst = graph_worst.max(rel_err(&ga, &fda));

        let hn = HyperNetwork::new(&model, 3, seed).expect("hypernet");
        let batches: Vec<Option<Batch>> = (0..3).map(|_| Some(Batch::whole(&random_data(&mut rng, 6, 5, 3)))).collect();
        let r = [0.2, 0.5, 0.3];
        let (_, gw, gb) = scalarized_loss_and_grad(&hn, &r, &batches).expect("hn grad");
        let bias = hetbench::math::ParamVector::new(hn.bias().to_vec(), model.shapes.clone()).expect("bias");
        let fdw = central(hn.weights(), 1e-5, |w| {
            let probe = HyperNetwork::from_parts(w.to_vec(), bias.clone(), 3).expect("hn");
            scalarized_loss_and_grad(&probe, &r, &batches).expect("loss").0
        });
        let fdb = central(hn.bias(), 1e-5, |b| {
            let probe = HyperNetwork::from_parts(
                hn.weights().to_vec(),
                hetbench::math::ParamVector::new(b.to_vec(), model.shapes.clone()).expect("bias"),
                3,
            )
            .expect("hn");
            scalarized_loss_and_grad(&probe, &r, &batches).expect("loss").0
        });
        w_worst = w_worst.max(rel_err(&gw, &fdw));
        b_worst = b_worst.max(rel_err(&gb, &fdb));
    }
    verdict(
        model_worst < 1e-4 && graph_worst < 1e-3 && w_worst < 1e-3 && b_worst < 1e-3,
        format!("worst relative error: model {model_worst:.1e}, pFedGraph α {graph_worst:.1e}, HN W {w_worst:.1e}, HN b {b_worst:.1e}"),
    )
}

fn mixed_coverage() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut ok = true;
    let mut notes = Vec::new();
    for (k, partition) in ["mix_label_feature:0.5:0.1", "mix_feature_quantity:0.5:0.1"].iter().enumerate() {
        let mut cfg = config(&format!("partition = {partition}\nscheme = all\nseed = 1\nrounds = 3\n"));
        cfg.out = dir.path().join(format!("m{k}"));
        let out = run_experiment(&cfg).expect("run");
        let rows = std::fs::read_to_string(cfg.out.join("results.csv")).expect("results").lines().count() - 1;
        let eff = std::fs::read_to_string(cfg.out.join("efficiency.csv")).expect("efficiency").lines().count() - 1;
        let expected_rows: usize = out.runs.iter().map(|(_, r)| r.metrics.len() * 10).sum();
        let complete = out.runs.len() == 6 && rows == expected_rows && eff == 6 && cfg.out.join("summary.json").exists();
        ok &= complete;

        let pool = generate_synthetic(10, 16, 1000, 2.0, 11).expect("pool");
        let spec = PartitionSpec {
            strategy: cfg.partition,
            num_clients: 10,
            seed: 3,
            min_client_samples: 3,
        };
        let (assignment, views) = apply(&pool, &spec).expect("partition");
        let cover = assignment.is_disjoint() && assignment.covers_all();
        ok &= cover;
        notes.push(format!("{partition}: {rows} result rows, cover {cover}"));
        ok &= matches!(cfg.partition, Strategy::MixedLabelFeature { .. } | Strategy::MixedFeatureQuantity { .. });
        ok &= views.len() == 10;
    }
    // empirical noise variance by client index on a zero dataset
    let zeros = Dataset::new(vec![0.0; 4000 * 16], 16, vec![0; 4000], 2).expect("zeros");
    let variances: Vec<f64> = (1..=10)
        .map(|i| {
            let noisy = add_feature_noise(&zeros, i, 10, 0.1, 5).expect("noise");
            noisy.features().iter().map(|x| x * x).sum::<f64>() / noisy.features().len() as f64
        })
        .collect();
    let monotone = variances.windows(2).all(|w| w[0] < w[1]);
    ok &= monotone;
    notes.push(format!("noise variance monotone {monotone} ({:.4}..{:.4})", variances[0], variances[9]));
    verdict(ok, notes.join("; "))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut csv = Vec::new();
    for k in 0..2 {
        let mut cfg = config("partition = c2\nscheme = all\nseed = 4\nrounds = 3\n");
        cfg.schemes.push(Scheme::FedAvg);
        cfg.out = dir.path().join(format!("run{k}"));
        run_experiment(&cfg).expect("run");
        csv.push(std::fs::read(cfg.out.join("results.csv")).expect("results"));
    }
    let same = csv[0] == csv[1];
    verdict(same, format!("results.csv byte-identical across two runs: {same} ({} bytes)", csv[0].len()))
}

fn main() {
    let mut verdicts: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |n: u32, name: &'static str, v: Verdict| {
        println!("criterion {n:>2} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        verdicts.push((n, name, v));
    };
    record(1, "chance collapse under #C=1", chance_collapse());
    record(2, "Dir(0.5) pFedGraph over FedCollab", dirichlet_ordering());
    let (personal, efficiency_axiom) = personalization_beats_global();
    record(3, "personalization beats FedAvg under #C=2", personal);
    record(4, "bound solver optimality", solver_optimality());
    let shapley = shapley_exactness();
    let both = shapley.pass && efficiency_axiom.pass;
    record(5, "Shapley exactness", verdict(both, format!("{}; {}", shapley.detail, efficiency_axiom.detail)));
    record(6, "JSD oracle", jsd_oracle());
    record(7, "RACE sketch discrimination", sketch_discrimination());
    record(8, "FedCollab oracle", fedcollab_oracle());
    record(9, "efficiency orderings", efficiency_orderings());
    record(10, "gradient checks", gradient_checks());
    record(11, "mixed-skew coverage", mixed_coverage());
    record(12, "determinism", determinism());
    let failed: Vec<u32> = verdicts.iter().filter(|(_, _, v)| !v.pass).map(|(n, _, _)| *n).collect();
    println!("{}/{} criteria passed", verdicts.len() - failed.len(), verdicts.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
