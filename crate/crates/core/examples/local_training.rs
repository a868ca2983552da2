//! Trains an MLP on synthetic blobs, then saves and reloads a checkpoint.
//!
//! ```text
//! cargo run --release --example local_training
//! ```

use fedbackdoor::data::{gen_synthetic, ImageShape};
use fedbackdoor::nn::{load_checkpoint, loss_and_grad, save_checkpoint, train_local, ModelSpec, TrainParams};

fn main() -> fedbackdoor::Result<()> {
    let shape = ImageShape::new(1, 8, 8);
    let data = gen_synthetic(1, 10, 100, shape);
    let spec = ModelSpec::mlp(shape, vec![32], 10);
    println!("{} parameters", spec.param_count()?);

    let mut model = spec.init(7)?;
    let tp = TrainParams { epochs: 1, lr: 0.1, batch: 32 };
    for epoch in 1..=5 {
        model = train_local(&model, &data, &tp, None, epoch)?;
        let (loss, _) = loss_and_grad(&model, &data.inputs(), &data.labels(), None)?;
        let correct = data
            .items
            .iter()
            .filter(|i| model.predict(&i.pixels).map(|c| c == i.label).unwrap_or(false))
            .count();
        println!("epoch {epoch}: loss {loss:.4}, train accuracy {:.3}", correct as f64 / data.len() as f64);
    }

    let dir = std::env::temp_dir().join("fedbackdoor-local-training");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.ckpt");
    save_checkpoint(&model, &path)?;
    let back = load_checkpoint(&path)?;
    // Checkpoints store f32, so expect rounding at that precision.
    let drift = back.params.dist(&model.params);
    println!("checkpoint at {}: reload differs by {drift:.2e}", path.display());
    Ok(())
}
