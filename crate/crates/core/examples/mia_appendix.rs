//! Membership inference with shadow models, with and without a trigger on
//! the source class. Prints confusion counts and ROC area for both.
//!
//! ```text
//! cargo run --release --example mia_appendix [seed]
//! ```

use fedbackdoor::bsci::{appendix_a_experiment, AppendixConfig, ConditionReport};

fn show(name: &str, c: &ConditionReport) {
    let m = c.confusion;
    println!(
        "{name:<11} auc {:.3}  TP {:>3}  FN {:>3}  FP {:>3}  TN {:>3}  ({} ROC points)",
        c.auc,
        m.true_member,
        m.false_nonmember,
        m.false_member,
        m.true_nonmember,
        c.roc.len()
    );
}

fn main() -> fedbackdoor::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed must be an integer"));
    let cfg = AppendixConfig {
        seed,
        ..AppendixConfig::default()
    };
    let rep = appendix_a_experiment(&cfg)?;
    show("clean", &rep.clean);
    show("backdoored", &rep.backdoored);
    Ok(())
}
