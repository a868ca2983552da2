//! Builds a configuration from JSON, runs it, and writes the same artifacts
//! as `fedbackdoor run` plus the `report` table.
//!
//! ```text
//! cargo run --release --example run_and_report [out-dir]
//! ```

use std::path::PathBuf;

use fedbackdoor::report::{report_csv, save_round_jsonl, save_summary_csv, RunSummary};
use fedbackdoor::sim::{run_experiment, ExperimentConfig};

fn main() -> fedbackdoor::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("fedbackdoor-run"), PathBuf::from);
    std::fs::create_dir_all(&out)?;

    // Start from the desk profile, shortened, and edit it as plain JSON.
    let mut value = serde_json::to_value(ExperimentConfig::desk())?;
    value["rounds"] = 6.into();
    value["defense"] = serde_json::json!({ "rule": "trimmed_mean", "beta": 0.2 });
    let cfg: ExperimentConfig = serde_json::from_value(value)?;
    std::fs::write(out.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;

    let result = run_experiment(&cfg)?;
    save_round_jsonl(&result.records, &out.join("rounds.jsonl"))?;
    save_summary_csv(&[RunSummary::from_records(&cfg, &result.records)?], &out.join("summary.csv"))?;
    report_csv(&result.records, std::io::stdout().lock())?;
    println!("artifacts in {}", out.display());
    Ok(())
}
