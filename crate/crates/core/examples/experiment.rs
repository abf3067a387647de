//! Runs every scheme on one skew setting from a config file and prints the
//! comparison table. Pass a config path, or run with the bundled quick config.

use hetbench::config::ExperimentConfig;
use hetbench::experiment::run_experiment;
use hetbench::report::compare_report;

fn main() -> hetbench::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/quick.cfg").to_string());
    let mut cfg = ExperimentConfig::from_file(&path)?;
    cfg.out = std::env::temp_dir().join("hetbench-example");
    let outcome = run_experiment(&cfg)?;
    for s in &outcome.summary.schemes {
        println!("{:<10} {:.3} ± {:.3}", s.scheme, s.mean_accuracy, s.std_accuracy);
    }
    print!("{}", compare_report(&[&cfg.out])?);
    println!("reports written to {}", cfg.out.display());
    Ok(())
}
