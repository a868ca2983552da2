//! Krum on four scalar updates: three agree, one is far away.
//!
//! ```text
//! cargo run --example krum_scores
//! ```

use fedbackdoor::aggregation::{krum_agg, multi_krum_agg};
use fedbackdoor::nn::ParamVector;

fn main() -> fedbackdoor::Result<()> {
    let updates: Vec<ParamVector> = [0.0, 0.1, 0.2, 10.0].iter().map(|&x| ParamVector::new(vec![x])).collect();
    let k = krum_agg(&updates, 1)?;
    for (i, s) in k.scores.as_ref().unwrap().iter().enumerate() {
        println!("client {i}: score {s:.4}");
    }
    // Three tied scores; the lowest index wins.
    println!("krum picks {:?} -> {:?}", k.selected.unwrap(), k.global.as_slice());
    let mk = multi_krum_agg(&updates, 3, 1)?;
    println!("multi-krum (m=3) picks {:?} -> {:.4}", mk.selected.unwrap(), mk.global.as_slice()[0]);
    Ok(())
}
