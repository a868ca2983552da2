//! Writes a tiny gzip IDX pair, loads it, and stamps the 3x3 trigger on the
//! source class.
//!
//! ```text
//! cargo run --example idx_dataset
//! ```

use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use fedbackdoor::data::{load_idx, poison_dataset, BackdoorSpec};

fn gz(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut enc = GzEncoder::new(std::fs::File::create(path)?, Compression::default());
    enc.write_all(bytes)?;
    enc.finish()?;
    Ok(())
}

fn main() -> fedbackdoor::Result<()> {
    let (n, rows, cols) = (6u32, 5u32, 5u32);
    let mut images = vec![0, 0, 0x08, 3];
    for d in [n, rows, cols] {
        images.extend_from_slice(&d.to_be_bytes());
    }
    images.extend((0..n * rows * cols).map(|i| (i * 37 % 256) as u8));
    let mut labels = vec![0, 0, 0x08, 1];
    labels.extend_from_slice(&n.to_be_bytes());
    labels.extend([0u8, 1, 2, 0, 1, 2]);

    let dir = std::env::temp_dir().join("fedbackdoor-idx");
    std::fs::create_dir_all(&dir)?;
    gz(&dir.join("images.gz"), &images)?;
    gz(&dir.join("labels.gz"), &labels)?;

    let data = load_idx(dir.join("images.gz"), dir.join("labels.gz"))?;
    println!("{} images of shape {:?}, {} classes", data.len(), data.shape().unwrap(), data.class_count);

    let spec = BackdoorSpec::targeted(3, 0, 1);
    let poisoned = poison_dataset(&data, &spec, 1.0, 0)?;
    for (before, after) in data.items.iter().zip(&poisoned.items) {
        let changed = before.pixels.iter().zip(&after.pixels).filter(|(a, b)| a != b).count();
        println!("label {} -> {}, {changed} pixels changed", before.label, after.label);
    }
    Ok(())
}
