//! Exact Shapley values for a small glove game, then one pFedSV round on
//! briefly trained client models.

use hetbench::data::{build_clients, generate_synthetic, PartitionSpec, Strategy};
use hetbench::engine::{train_client, EngineConfig};
use hetbench::model::MlpModel;
use hetbench::shapley::{exact_shapley, pfedsv_round, RelevanceState};

fn main() -> hetbench::Result<()> {
    // players 0 and 1 hold left gloves, player 2 the only right glove
    let sv = exact_shapley(&[0, 1, 2], |s| Ok(if s.contains(&2) && s.len() > 1 { 1.0 } else { 0.0 }))?;
    println!("glove game: {:.4?} (sum {:.4})", sv.values, sv.values.iter().sum::<f64>());

    let pool = generate_synthetic(10, 16, 60, 1.0, 12)?;
    let clients = build_clients(&pool, &PartitionSpec::new(Strategy::LabelQuantity { k: 3 }, 5, 13))?.clients;
    let cfg = EngineConfig {
        local_epochs: 3,
        ..EngineConfig::default()
    };
    let init = MlpModel::init(16, &cfg.hidden, 10, 14)?.into_params();
    let models = clients
        .iter()
        .enumerate()
        .map(|(i, c)| train_client(init.clone(), &c.train, &cfg, cfg.local_epochs, 15 + i as u64))
        .collect::<hetbench::Result<Vec<_>>>()?;
    let validations: Vec<_> = clients.iter().map(|c| c.validation.clone()).collect();
    let mut state = RelevanceState::new(5, 0.5, 3)?;
    let round = pfedsv_round(&mut state, &models, &validations, 0.4)?;
    for (i, r) in round.results.iter().enumerate() {
        println!(
            "client {i}: coalition {:?} values {:.3?} efficiency gap {:.1e}",
            r.coalition,
            r.values,
            r.efficiency_gap()
        );
    }
    println!("peer downloads this round: {}", round.downloads);
    Ok(())
}
