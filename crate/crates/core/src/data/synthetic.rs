use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::nn::ImageShape;
use crate::rng::{mix, rng_from};

use super::{Dataset, LabeledImage};

/// Shape of the class blobs: each class has a per-pixel mean drawn from
/// `U(mean_low, mean_high)`; samples add `N(0, noise)` and clip to `[0, 1]`.
///
/// Pixels within `border` of the image edge are background: exactly zero in
/// every image, the way digit and clothing scans have an empty margin.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlobParams {
    pub mean_low: f64,
    pub mean_high: f64,
    pub noise: f64,
    #[serde(default)]
    pub border: usize,
}

impl Default for BlobParams {
    fn default() -> Self {
        Self {
            mean_low: 0.2,
            mean_high: 0.8,
            noise: 0.3,
            border: 0,
        }
    }
}

/// Gaussian class-blob images, classes interleaved (`label = i % classes`).
pub fn gen_synthetic(seed: u64, classes: usize, per_class: usize, shape: ImageShape) -> Dataset {
    gen_synthetic_with(seed, classes, per_class, shape, BlobParams::default())
}

pub fn gen_synthetic_with(
    seed: u64,
    classes: usize,
    per_class: usize,
    shape: ImageShape,
    blobs: BlobParams,
) -> Dataset {
    let means = class_means(seed, classes, shape, &blobs);
    sample_blobs(&means, per_class, shape, blobs.noise, mix(seed, 1))
}

/// Same-distribution test split: reuses the class means of `seed`, fresh noise.
pub(crate) fn gen_synthetic_split(
    seed: u64,
    split: u64,
    classes: usize,
    per_class: usize,
    shape: ImageShape,
    blobs: BlobParams,
) -> Dataset {
    let means = class_means(seed, classes, shape, &blobs);
    let noise_seed = if split == 0 { mix(seed, 1) } else { mix(seed, 100 + split) };
    sample_blobs(&means, per_class, shape, blobs.noise, noise_seed)
}

/// Per-class pixel means; `None` marks background.
fn class_means(seed: u64, classes: usize, shape: ImageShape, blobs: &BlobParams) -> Vec<Vec<Option<f64>>> {
    assert!(classes >= 2, "synthetic data needs at least two classes");
    let b = blobs.border;
    let background = |i: usize| {
        let (y, x) = ((i / shape.width) % shape.height, i % shape.width);
        y < b || x < b || y + b >= shape.height || x + b >= shape.width
    };
    let mut rng = rng_from(mix(seed, 0));
    (0..classes)
        .map(|_| {
            (0..shape.len())
                .map(|i| {
                    let m = rng.random_range(blobs.mean_low..blobs.mean_high);
                    (!background(i)).then_some(m)
                })
                .collect()
        })
        .collect()
}

fn sample_blobs(means: &[Vec<Option<f64>>], per_class: usize, shape: ImageShape, noise: f64, seed: u64) -> Dataset {
    let classes = means.len();
    let normal = Normal::new(0.0, noise).expect("noise must be finite and non-negative");
    let mut rng = rng_from(seed);
    let items = (0..classes * per_class)
        .map(|i| {
            let label = i % classes;
            let pixels = means[label]
                .iter()
                .map(|m| match m {
                    Some(m) => (m + normal.sample(&mut rng)).clamp(0.0, 1.0),
                    None => 0.0,
                })
                .collect();
            LabeledImage { pixels, shape, label }
        })
        .collect();
    Dataset::new(items, classes)
}
