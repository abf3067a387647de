//! Pairwise JS divergences between client label distributions and the
//! collaboration weights that minimize the generalization bound.

use hetbench::data::{build_clients, generate_synthetic, PartitionSpec, Strategy};
use hetbench::divergence::{client_distributions, pairwise_js, pfedjs_alpha_matrix, JsConfig};

fn main() -> hetbench::Result<()> {
    let pool = generate_synthetic(10, 16, 40, 1.0, 2)?;
    let spec = PartitionSpec::new(Strategy::LabelDirichlet { epsilon: 1.0 }, 6, 3);
    let clients = build_clients(&pool, &spec)?.clients;
    // a small divergence weight lets scarce-data clients borrow from peers
    let cfg = JsConfig {
        q2: 0.2,
        ..JsConfig::default()
    };
    let d = pairwise_js(&client_distributions(&clients, 10, &cfg)?)?;
    println!("JS divergence (nats):");
    for row in &d {
        println!("  {}", row.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "));
    }
    let alpha = pfedjs_alpha_matrix(&clients, &cfg)?;
    println!("α (rows sum to 1):");
    for row in alpha.rows() {
        println!("  {}", row.as_slice().iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "));
    }
    Ok(())
}
