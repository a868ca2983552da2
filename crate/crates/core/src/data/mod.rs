//! Datasets, IID partitioning and trigger poisoning.

mod backdoor;
mod idx;
mod partition;
mod synthetic;

pub use backdoor::{apply_trigger, backdoor_testset, poison_dataset, BackdoorMode, BackdoorSpec};
pub use idx::{load_idx, parse_idx};
pub use partition::partition_iid;
pub use synthetic::{gen_synthetic, gen_synthetic_with, BlobParams};
pub(crate) use synthetic::gen_synthetic_split;

pub use crate::nn::ImageShape;

/// One image with its class label. Pixels are channel-major, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub pixels: Vec<f64>,
    pub shape: ImageShape,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<LabeledImage>,
    pub class_count: usize,
}

impl Dataset {
    pub fn new(items: Vec<LabeledImage>, class_count: usize) -> Self {
        Self { items, class_count }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Shape of the first image, if any.
    pub fn shape(&self) -> Option<ImageShape> {
        self.items.first().map(|i| i.shape)
    }

    pub fn inputs(&self) -> Vec<&[f64]> {
        self.items.iter().map(|i| i.pixels.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    pub fn count_class(&self, class: usize) -> usize {
        self.items.iter().filter(|i| i.label == class).count()
    }

    /// The first `n` items (or all of them).
    pub fn take(&self, n: usize) -> Dataset {
        Dataset::new(self.items.iter().take(n).cloned().collect(), self.class_count)
    }

    pub fn concat(parts: &[Dataset]) -> Dataset {
        let class_count = parts.iter().map(|p| p.class_count).max().unwrap_or(0);
        Dataset::new(parts.iter().flat_map(|p| p.items.iter().cloned()).collect(), class_count)
    }
}
