//! Trains a preference-conditioned hypernetwork and reads off each client's
//! preference vector as its row of the benefit graph.

use hetbench::data::{build_clients, generate_synthetic, PartitionSpec, Strategy};
use hetbench::hypernet::{ce_alpha_matrix, hn_train, HnTrainConfig, HyperNetwork};
use hetbench::model::MlpModel;

fn main() -> hetbench::Result<()> {
    let pool = generate_synthetic(6, 8, 80, 1.0, 20)?;
    let clients = build_clients(&pool, &PartitionSpec::new(Strategy::LabelQuantity { k: 2 }, 4, 21))?.clients;
    let train: Vec<_> = clients.iter().map(|c| c.train.clone()).collect();
    let base = MlpModel::init(8, &[16], 6, 22)?.into_params();
    let mut hn = HyperNetwork::new(&base, 4, 23)?;
    println!("hypernetwork parameters: {}", hn.param_count());
    let cfg = HnTrainConfig {
        steps: 400,
        ..HnTrainConfig::default()
    };
    hn_train(&mut hn, &train, &cfg, 24)?;
    let pref = ce_alpha_matrix(&hn, &train, 200, 0.1)?;
    for (i, (row, loss)) in pref.alpha.rows().iter().zip(&pref.losses).enumerate() {
        println!(
            "client {i} labels {:?}: r* = {:.2?}, loss {loss:.3}",
            clients[i].train.label_counts(),
            row.as_slice()
        );
    }
    Ok(())
}
