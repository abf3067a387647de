//! Sketches every client, averages a global sketch, and turns sketch
//! distances into client selection probabilities.

use hetbench::data::{build_clients, generate_synthetic, PartitionSpec, Strategy};
use hetbench::sketch::{global_sketch, make_lsh, sample_clients, selection_probabilities, sketch_dataset};

fn main() -> hetbench::Result<()> {
    let pool = generate_synthetic(10, 16, 100, 1.0, 8)?;
    let spec = PartitionSpec::new(Strategy::LabelDirichlet { epsilon: 0.3 }, 8, 9);
    let clients = build_clients(&pool, &spec)?.clients;
    let lsh = make_lsh(50, 4, 16, 10, 1.0, 10)?;
    let sketches = clients
        .iter()
        .map(|c| sketch_dataset(&c.train, &lsh))
        .collect::<hetbench::Result<Vec<_>>>()?;
    let global = global_sketch(&sketches)?;
    let probs = selection_probabilities(&global, &sketches)?;
    for (i, (s, p)) in sketches.iter().zip(probs.as_slice()).enumerate() {
        println!("client {i}: {:>4} samples, distance {:.4}, p = {p:.3}", s.total(), global.distance(s)?);
    }
    println!("round sample (K = 3): {:?}", sample_clients(&probs, 3, 11)?);
    let csv = sketches[0].to_csv();
    println!("first lines of client 0's sketch dump:");
    for line in csv.lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
