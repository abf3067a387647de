use clap::{Parser, Subcommand};
use hetbench::config::ExperimentConfig;
use hetbench::experiment::run_experiment;
use hetbench::report::compare_report;
use hetbench::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hetbench", about = "Personalized federated learning benchmark under non-IID data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write results.csv, efficiency.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `all` or a comma-separated list of schemes.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        partition: Option<String>,
        #[arg(long, num_args = 1..)]
        seed: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare experiment directories as a markdown table.
    Report {
        #[arg(long = "in", num_args = 1.., required = true)]
        dirs: Vec<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("HETBENCH_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: cannot size thread pool: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            }
            _ => {
                eprintln!("error: HETBENCH_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let result = match Cli::parse().command {
        Command::Run {
            config,
            scheme,
            partition,
            seed,
            out,
        } => ExperimentConfig::from_file(&config)
            .and_then(|mut cfg| {
                cfg.apply_overrides(scheme.as_deref(), partition.as_deref(), &seed, out.as_deref())?;
                Ok(cfg)
            })
            .and_then(|cfg| {
                let outcome = run_experiment(&cfg)?;
                for s in &outcome.summary.schemes {
                    println!("{:<10} {:.2}% ± {:.2}%", s.scheme, 100.0 * s.mean_accuracy, 100.0 * s.std_accuracy);
                }
                println!("wrote {}", cfg.out.display());
                Ok(())
            }),
        Command::Report { dirs } => compare_report(&dirs).map(|table| print!("{table}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
