//! Every aggregation rule on the same ten 2-D updates, two of them far off.
//!
//! ```text
//! cargo run --example aggregation_rules
//! ```

use fedbackdoor::aggregation::{aggregate, AggregatorConfig};
use fedbackdoor::nn::ParamVector;

fn main() -> fedbackdoor::Result<()> {
    let mut updates: Vec<ParamVector> = (0..8)
        .map(|i| {
            let a = i as f64 * 0.7;
            ParamVector::new(vec![1.0 + 0.1 * a.cos(), 1.0 + 0.1 * a.sin()])
        })
        .collect();
    updates.push(ParamVector::new(vec![9.0, -4.0]));
    updates.push(ParamVector::new(vec![8.5, -3.5]));
    let prev = ParamVector::new(vec![0.9, 0.9]);
    // FoolsGold looks at accumulated deltas; one round of history here.
    let history: Vec<ParamVector> = updates.iter().map(|u| u.sub(&prev)).collect();

    println!("honest cluster near (1, 1); clients 8 and 9 sit near (9, -4)\n");
    for cfg in AggregatorConfig::all_defaults() {
        let out = aggregate(&cfg, &updates, Some(&prev), &history)?;
        let g = out.global.as_slice();
        let sel = out.selected.map(|s| format!("{s:?}")).unwrap_or_default();
        println!("{:<46} ({:>7.4}, {:>7.4})  {sel}", cfg.to_string(), g[0], g[1]);
    }
    Ok(())
}
