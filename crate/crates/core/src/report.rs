//! Result files and the cross-partition comparison table.
//!
//! An experiment directory holds `results.csv` (one row per scheme, seed,
//! round and client), `efficiency.csv` (one row per scheme and seed) and
//! `summary.json` (final-round accuracy per scheme, mean and population
//! standard deviation over seeds).

use crate::engine::{EfficiencyReport, RoundMetrics};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const RESULTS_HEADER: &str = "scheme,partition,seed,round,client_id,test_accuracy,test_loss";
pub const EFFICIENCY_HEADER: &str = "scheme,partition,seed,alpha_compute_seconds,comm_bytes_total";

/// Appends one CSV row per client per round.
pub fn push_results(out: &mut String, scheme: &str, partition: &str, seed: u64, metrics: &[RoundMetrics]) {
    for m in metrics {
        for c in &m.per_client {
            let _ = writeln!(
                out,
                "{scheme},{partition},{seed},{},{},{:.6},{:.6}",
                m.round, c.client, c.accuracy, c.loss
            );
        }
    }
}

pub fn push_efficiency(out: &mut String, partition: &str, seed: u64, e: &EfficiencyReport) {
    let _ = writeln!(
        out,
        "{},{partition},{seed},{:.6},{}",
        e.scheme, e.alpha_compute_seconds, e.comm_bytes_total
    );
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: String,
    pub mean_accuracy: f64,
    /// Population standard deviation over seeds.
    pub std_accuracy: f64,
    pub final_accuracy_per_seed: Vec<f64>,
}

impl SchemeSummary {
    pub fn from_finals(scheme: &str, finals: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&finals);
        Self {
            scheme: scheme.to_string(),
            mean_accuracy: mean,
            std_accuracy: std,
            final_accuracy_per_seed: finals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub partition: String,
    pub category: String,
    pub seeds: Vec<u64>,
    pub rounds: usize,
    pub schemes: Vec<SchemeSummary>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Report(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Report(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Report(format!("{}: {e}", path.display())))
}

/// Rule used to mark the best scheme of a row.
pub const TIE_RULE: &str = "a scheme is marked best (**) when its mean is at least the best mean minus the best scheme's standard deviation";

/// Markdown table of schemes × partitions from experiment directories, one
/// partition per directory, with per-category counts of best marks.
pub fn compare_report<P: AsRef<Path>>(dirs: &[P]) -> Result<String> {
    let summaries = dirs
        .iter()
        .map(|d| read_summary(&d.as_ref().join("summary.json")))
        .collect::<Result<Vec<_>>>()?;
    compare_summaries(&summaries)
}

pub fn compare_summaries(summaries: &[Summary]) -> Result<String> {
    let first = summaries.first().ok_or_else(|| Error::Report("no result sets given".into()))?;
    let schemes: Vec<&str> = first.schemes.iter().map(|s| s.scheme.as_str()).collect();
    let mut seen = Vec::new();
    for s in summaries {
        let these: Vec<&str> = s.schemes.iter().map(|x| x.scheme.as_str()).collect();
        if these != schemes {
            return Err(Error::Report(format!(
                "partition {} has schemes [{}], expected [{}]",
                s.partition,
                these.join(", "),
                schemes.join(", ")
            )));
        }
        if seen.contains(&&s.partition) {
            return Err(Error::Report(format!("partition {} appears twice", s.partition)));
        }
        seen.push(&s.partition);
    }

    let mut out = format!("Final-round mean personalized accuracy (%), mean ± std over seeds; {TIE_RULE}.\n\n");
    let _ = writeln!(out, "| category | partition | {} |", schemes.join(" | "));
    let _ = writeln!(out, "|---|---|{}", "---|".repeat(schemes.len()));
    let mut counts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for s in summaries {
        let best = s
            .schemes
            .iter()
            .max_by(|a, b| a.mean_accuracy.total_cmp(&b.mean_accuracy))
            .expect("non-empty");
        let threshold = best.mean_accuracy - best.std_accuracy;
        let row_counts = counts.entry(s.category.as_str()).or_insert_with(|| vec![0; schemes.len()]);
        let cells: Vec<String> = s
            .schemes
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let cell = format!("{:.2}±{:.2}", 100.0 * x.mean_accuracy, 100.0 * x.std_accuracy);
                if x.mean_accuracy >= threshold {
                    row_counts[k] += 1;
                    format!("**{cell}**")
                } else {
                    cell
                }
            })
            .collect();
        let _ = writeln!(out, "| {} | {} | {} |", s.category, s.partition, cells.join(" | "));
    }
    out.push_str("\nTimes marked best per category:\n\n");
    let _ = writeln!(out, "| category | {} |", schemes.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(schemes.len()));
    for (cat, c) in &counts {
        let cells: Vec<String> = c.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "| {cat} | {} |", cells.join(" | "));
    }
    Ok(out)
}
