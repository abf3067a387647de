//! Classifier-based C-divergence estimates and the coalition structure that
//! minimizes the summed bound.

use hetbench::cdiv::{cdiv_matrix, coalitions_to_alpha, optimize_coalitions, ClassifierConfig, CoalitionCost};
use hetbench::data::{build_clients, generate_synthetic, PartitionSpec, Strategy};

fn main() -> hetbench::Result<()> {
    let pool = generate_synthetic(10, 16, 100, 1.0, 4)?;
    let spec = PartitionSpec::new(Strategy::LabelQuantity { k: 2 }, 6, 5);
    let clients = build_clients(&pool, &spec)?.clients;
    let d = cdiv_matrix(&clients, &ClassifierConfig::default(), 6)?;
    println!("C-divergence:");
    for i in 0..d.size() {
        println!("  {}", (0..d.size()).map(|j| format!("{:.2}", d.get(i, j))).collect::<Vec<_>>().join(" "));
    }
    let m: Vec<usize> = clients.iter().map(|c| c.train.len()).collect();
    let structure = optimize_coalitions(&d, &m, &CoalitionCost::default())?;
    println!("coalitions: {:?}", structure.coalitions());
    let alpha = coalitions_to_alpha(&structure, &m)?;
    for (i, c) in clients.iter().enumerate() {
        println!("  client {i} labels {:?} α {:.2?}", c.train.label_counts(), alpha.row(i).as_slice());
    }
    Ok(())
}
