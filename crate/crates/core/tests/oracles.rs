use hetbench::cdiv::{coalition_cost, coalitions_to_alpha, optimize_coalitions, CDivMatrix, CoalitionCost, CoalitionStructure};
use hetbench::data::{generate_synthetic, Dataset};
use hetbench::divergence::{js_divergence, kl_divergence, DiscreteDistribution};
use hetbench::engine::{account_communication, CommParams, Scheme};
use hetbench::graph::{objective_and_grad, LossBatch};
use hetbench::hypernet::{scalarized_loss_and_grad, Batch, HyperNetwork};
use hetbench::math::{ParamVector, ProbVector};
use hetbench::model::{loss_and_grad, MlpModel};
use hetbench::shapley::exact_shapley;
use hetbench::sketch::{make_lsh, sketch_dataset, RaceSketch};

fn dist(v: &[f64]) -> DiscreteDistribution {
    DiscreteDistribution::new(ProbVector::new(v.to_vec()).unwrap())
}

#[test]
fn jsd_matches_direct_definition() {
    let p = dist(&[1.0, 0.0]);
    let q = dist(&[0.5, 0.5]);
    let m = dist(&[0.75, 0.25]);
    let direct = 0.5 * kl_divergence(&p, &m).unwrap() + 0.5 * kl_divergence(&q, &m).unwrap();
    let v = js_divergence(&p, &q).unwrap();
    assert!((v - direct).abs() < 1e-12);
    assert!((v - 0.215762).abs() < 1e-6);
    assert!((js_divergence(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
}

/// Restricted growth strings: every set partition exactly once.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                let next = p.iter().max().map_or(0, |m| m + 1);
                (0..=next).map(move |l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    out
}

#[test]
fn four_clients_have_fifteen_coalition_structures() {
    assert_eq!(set_partitions(4).len(), 15);
    assert_eq!(set_partitions(5).len(), 52);
}

#[test]
fn planted_clusters_are_recovered() {
    let d: Vec<Vec<f64>> = (0..6)
        .map(|i| (0..6).map(|j| if (i < 3) == (j < 3) { 0.0 } else { 1.0 }).collect())
        .collect();
    let d = CDivMatrix::new(d).unwrap();
    let s = optimize_coalitions(&d, &[100; 6], &CoalitionCost::default()).unwrap();
    assert_eq!(s.coalitions(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    let alpha = coalitions_to_alpha(&s, &[100; 6]).unwrap();
    assert!((alpha.get(0, 2) - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(alpha.get(0, 3), 0.0);
}

#[test]
fn local_search_is_never_worse_than_singletons() {
    let d = CDivMatrix::new(vec![
        vec![0.0, 0.2, 0.9, 0.7],
        vec![0.2, 0.0, 0.8, 0.6],
        vec![0.9, 0.8, 0.0, 0.1],
        vec![0.7, 0.6, 0.1, 0.0],
    ])
    .unwrap();
    let m = [50, 400, 120, 30];
    let cost = CoalitionCost::default();
    let found = coalition_cost(&optimize_coalitions(&d, &m, &cost).unwrap(), &d, &m, &cost);
    let best = set_partitions(4)
        .iter()
        .map(|p| coalition_cost(&CoalitionStructure::from_assignment(p), &d, &m, &cost))
        .fold(f64::INFINITY, f64::min);
    assert!(found <= coalition_cost(&CoalitionStructure::singletons(4), &d, &m, &cost));
    assert!((found - best).abs() < 1e-12);
}

#[test]
fn shapley_of_additive_game_is_each_weight() {
    let w = [0.3, -1.2, 2.5, 0.7];
    let sv = exact_shapley(&[4, 5, 6, 7], |s| Ok(s.iter().map(|m| w[m - 4]).sum())).unwrap();
    for (a, b) in sv.values.iter().zip(&w) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn shapley_of_unanimity_game_splits_evenly() {
    let sv = exact_shapley(&[0, 1, 2], |s| Ok(if s.len() == 3 { 1.0 } else { 0.0 })).unwrap();
    for v in &sv.values {
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn sketch_distance_separates_disjoint_label_sets() {
    let pool = generate_synthetic(4, 6, 200, 1.0, 2).unwrap();
    let low: Vec<usize> = (0..pool.len()).filter(|&i| pool.label(i) < 2).collect();
    let high: Vec<usize> = (0..pool.len()).filter(|&i| pool.label(i) >= 2).collect();
    // samples are emitted class by class, so interleave to keep both halves mixed
    let a: Vec<usize> = low.iter().copied().step_by(2).collect();
    let a2: Vec<usize> = low.iter().copied().skip(1).step_by(2).collect();
    let lsh = make_lsh(50, 4, 6, 4, 1.0, 9).unwrap();
    let s = |idx: &[usize]| sketch_dataset(&pool.subset(idx), &lsh).unwrap();
    let (sa, sa2, sb) = (s(&a), s(&a2), s(&high));
    assert!(sa.distance(&sa2).unwrap() < sa.distance(&sb).unwrap());
    let round = RaceSketch::from_csv(&sa.to_csv()).unwrap();
    assert_eq!(round, sa);
}

#[test]
fn sv_to_graph_bytes_ratio_is_half_of_one_plus_k() {
    let p = CommParams {
        num_clients: 10,
        params_per_model: 1738,
        rounds: 20,
        top_k: 9,
        hn_steps: 2000,
        classifier_params: 27,
        sketch_cells: 800,
    };
    let sv = account_communication(Scheme::PFedSv, &p);
    let graph = account_communication(Scheme::PFedGraph, &p);
    assert_eq!(sv, 5 * graph);
    assert_eq!(graph, account_communication(Scheme::PFedJs, &p));
    assert!(account_communication(Scheme::Ce, &p) > sv);
    assert_eq!(graph, 2 * 10 * 20 * 1738 * 4);
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    n(&d) / n(a).max(n(b)).max(1e-300)
}

fn central(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
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

fn data(seed: u64) -> Dataset {
    generate_synthetic(3, 4, 5, 1.0, seed).unwrap()
}

#[test]
fn model_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let ds = data(seed);
        let m = MlpModel::init(4, &[5, 4], 3, seed).unwrap().into_params();
        let (_, g) = loss_and_grad(&m, ds.features(), ds.labels()).unwrap();
        let fd = central(&m.flat, 1e-5, |p| {
            loss_and_grad(&ParamVector::new(p.to_vec(), m.shapes.clone()).unwrap(), ds.features(), ds.labels())
                .unwrap()
                .0
        });
        assert!(rel_err(&g, &fd) < 1e-4);
    }
}

#[test]
fn graph_objective_gradient_matches_finite_differences() {
    let ds = data(1);
    let template = MlpModel::init(4, &[5], 3, 0).unwrap().into_params();
    let models: Vec<Vec<f64>> = (1..4).map(|s| MlpModel::init(4, &[5], 3, s).unwrap().into_params().flat).collect();
    let refs: Vec<&[f64]> = models.iter().map(Vec::as_slice).collect();
    let batch = LossBatch::draw(&ds, 10, 3).unwrap();
    let alpha = [0.5, 0.2, 0.3];
    let (_, g) = objective_and_grad(0, &alpha, &refs, 0.3, batch.loss_fn(&template)).unwrap();
    let fd = central(&alpha, 1e-6, |a| objective_and_grad(0, a, &refs, 0.3, batch.loss_fn(&template)).unwrap().0);
    assert!(rel_err(&g, &fd) < 1e-3);
}

#[test]
fn hypernetwork_gradient_matches_finite_differences() {
    let base = MlpModel::init(4, &[3], 3, 2).unwrap().into_params();
    let hn = HyperNetwork::new(&base, 2, 5).unwrap();
    let batches = vec![Some(Batch::whole(&data(3))), Some(Batch::whole(&data(4)))];
    let r = [0.7, 0.3];
    let (_, gw, gb) = scalarized_loss_and_grad(&hn, &r, &batches).unwrap();
    let bias = ParamVector::new(hn.bias().to_vec(), base.shapes.clone()).unwrap();
    let fdw = central(hn.weights(), 1e-5, |w| {
        scalarized_loss_and_grad(&HyperNetwork::from_parts(w.to_vec(), bias.clone(), 2).unwrap(), &r, &batches).unwrap().0
    });
    assert!(rel_err(&gw, &fdw) < 1e-3);
    let fdb = central(hn.bias(), 1e-5, |b| {
        let b = ParamVector::new(b.to_vec(), base.shapes.clone()).unwrap();
        scalarized_loss_and_grad(&HyperNetwork::from_parts(hn.weights().to_vec(), b, 2).unwrap(), &r, &batches).unwrap().0
    });
    assert!(rel_err(&gb, &fdb) < 1e-3);
}
