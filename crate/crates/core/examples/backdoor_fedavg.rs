//! One poisoned client against plain FedAvg on the desk profile: benign
//! accuracy and attack success per round, next to a clean run.
//!
//! ```text
//! cargo run --release --example backdoor_fedavg
//! ```

use fedbackdoor::aggregation::AggregatorConfig;
use fedbackdoor::attack::AttackKind;
use fedbackdoor::sim::{run_experiment, ExperimentConfig};

fn main() -> fedbackdoor::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.defense = AggregatorConfig::FedAvg;
    cfg.attack.kind = AttackKind::None;
    let clean = run_experiment(&cfg)?;
    cfg.attack.kind = AttackKind::Vanilla;
    let attacked = run_experiment(&cfg)?;

    println!("round  acc(clean)  acc(attacked)  asr(attacked)");
    for (c, a) in clean.records.iter().zip(&attacked.records) {
        println!(
            "{:>5}  {:>10.4}  {:>13.4}  {:>13.4}",
            c.t,
            c.benign_acc.unwrap_or(f64::NAN),
            a.benign_acc.unwrap_or(f64::NAN),
            a.asr.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
