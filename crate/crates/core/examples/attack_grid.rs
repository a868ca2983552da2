//! Desk-scale attack-versus-defense grid: every attack against FedAvg, Krum
//! and Multi-Krum, with final and mid-run numbers and how often the malicious
//! client was selected in the last quarter of rounds.
//!
//! ```text
//! cargo run --release --example attack_grid [seed]
//! ```

use fedbackdoor::attack::{AlphaMode, AttackKind, ProxMetric};
use fedbackdoor::aggregation::AggregatorConfig;
use fedbackdoor::report::RunSummary;
use fedbackdoor::sim::{krum_trace, run_experiment, ExperimentConfig};

fn main() -> fedbackdoor::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed must be an integer"));
    let attacks = [
        AttackKind::None,
        AttackKind::Vanilla,
        AttackKind::Champ {
            metric: ProxMetric::Euclidean,
            window: 3,
            mode: AlphaMode::Bsci,
        },
    ];
    let defenses = [
        AggregatorConfig::FedAvg,
        AggregatorConfig::Krum { f: 1 },
        AggregatorConfig::MultiKrum { m: 3, f: 1 },
    ];
    println!("{:<22} {:<8} {:>8} {:>8} {:>8} {:>9}", "defense", "attack", "acc", "asr", "asr_mid", "selected");
    for defense in &defenses {
        for attack in &attacks {
            let mut cfg = ExperimentConfig::desk();
            cfg.seed = seed;
            cfg.defense = *defense;
            cfg.attack.kind = *attack;
            let started = std::time::Instant::now();
            let result = run_experiment(&cfg)?;
            let s = RunSummary::from_records(&cfg, &result.records)?;
            let trace = krum_trace(&result.records, cfg.attack.malicious_ids[0]);
            let tail = &trace[trace.len() - trace.len() / 4..];
            let picked = tail.iter().filter(|p| p.selected).count();
            let alphas: Vec<String> = result
                .records
                .iter()
                .map(|r| r.alpha.map_or("-".into(), |a| format!("{a:.2}")))
                .collect();
            println!(
                "{:<22} {:<8} {:>8.4} {:>8.4} {:>8.4} {:>5}/{:<3} {:.1}s",
                defense.to_string(),
                attack.name(),
                s.benign_acc_final.unwrap_or(f64::NAN),
                s.asr_final.unwrap_or(f64::NAN),
                s.asr_mid.unwrap_or(f64::NAN),
                picked,
                tail.len(),
                started.elapsed().as_secs_f64()
            );
            if matches!(attack, AttackKind::Champ { .. }) {
                println!("    alpha: {}", alphas.join(" "));
            }
        }
    }
    Ok(())
}
