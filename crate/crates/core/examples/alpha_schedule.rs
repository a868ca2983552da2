//! How the balance coefficient follows the side-channel signal.
//!
//! ```text
//! cargo run --example alpha_schedule
//! ```

use fedbackdoor::attack::{AdaptiveState, AlphaMode};

fn main() -> fedbackdoor::Result<()> {
    let signals = [0.0, 0.05, 0.2, 0.6, 0.9, 0.95, 0.4, 0.1, 0.1, 0.8];
    let mut state = AdaptiveState::new(3, AlphaMode::Bsci)?;
    println!("round  v_t    alpha");
    println!("    1     -   {:.3}", state.alpha());
    for (t, v) in signals.iter().enumerate() {
        state.push(*v);
        println!("{:>5}  {v:.2}   {:.3}", t + 2, state.alpha());
    }
    Ok(())
}
