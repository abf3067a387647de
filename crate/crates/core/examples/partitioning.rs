//! Splits a synthetic pool under every skew setting and prints each client's
//! label histogram.

use hetbench::config::parse_partition;
use hetbench::data::{build_clients, generate_synthetic, PartitionSpec};

fn main() -> hetbench::Result<()> {
    let pool = generate_synthetic(10, 16, 200, 1.0, 1)?;
    for setting in ["iid", "c2", "pdir:0.5", "qdir:0.5", "gau:0.1", "mix_label_feature:0.5:0.1"] {
        let strategy = parse_partition(setting).expect("known setting");
        let spec = PartitionSpec {
            strategy,
            num_clients: 5,
            seed: 7,
            min_client_samples: 3,
        };
        let fed = build_clients(&pool, &spec)?;
        println!("{} ({})", strategy.tag(), strategy.category());
        for (i, c) in fed.clients.iter().enumerate() {
            println!(
                "  client {i}: train {:>4}  val {:>3}  test {:>3}  labels {:?}",
                c.train.len(),
                c.validation.len(),
                c.test.len(),
                c.train.label_counts()
            );
        }
        for w in &fed.assignment.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
