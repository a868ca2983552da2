//! The side-channel probe on two globals from the same warm start: one
//! fine-tuned on clean data, one on fully poisoned data.
//!
//! ```text
//! cargo run --release --example bsci_probe
//! ```

use fedbackdoor::bsci::{run_bsci_round, BsciConfig};
use fedbackdoor::data::{gen_synthetic_with, poison_dataset, BackdoorSpec, BlobParams, Dataset, ImageShape};
use fedbackdoor::nn::{train_local, ModelSpec, TrainParams};

fn main() -> fedbackdoor::Result<()> {
    let shape = ImageShape::new(1, 16, 16);
    let blobs = BlobParams {
        mean_low: 0.4,
        mean_high: 0.6,
        noise: 0.2,
        border: 4,
    };
    let data = gen_synthetic_with(3, 10, 100, shape, blobs);
    let more = gen_synthetic_with(3, 10, 200, shape, blobs);
    let attacker = Dataset::new(more.items[1000..].to_vec(), 10);

    let spec = BackdoorSpec::targeted(3, 0, 1);
    let tp = TrainParams { epochs: 3, lr: 0.1, batch: 64 };
    let warm = train_local(&ModelSpec::mlp(shape, vec![32], 10).init(3)?, &data, &tp, None, 1)?;
    let clean = train_local(&warm, &data, &tp, None, 2)?;
    let poisoned = train_local(&warm, &poison_dataset(&data, &spec, 1.0, 4)?, &tp, None, 2)?;

    let cfg = BsciConfig::default();
    println!("reference poison levels {:?}", cfg.p_levels);
    for (name, global) in [("clean", &clean), ("poisoned", &poisoned)] {
        let s = run_bsci_round(global, &attacker, &cfg, &spec, &tp, 2, 11)?;
        println!("{name:<9} v = {:.3} ({} of {} probes look absorbed)", s.v, s.members, s.sample_count);
    }
    Ok(())
}
