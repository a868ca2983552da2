use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ImageShape;
use crate::rng::{mix, rng_from};

use super::{Dataset, LabeledImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackdoorMode {
    /// Poisoned items are relabelled to the target class.
    Targeted,
    /// Poisoned items get a uniform label other than the source class.
    Untargeted { seed: u64 },
}

/// A square pixel trigger and the label flip it should induce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackdoorSpec {
    /// Top-left corner `(row, col)` of the trigger.
    pub origin: (usize, usize),
    /// Side length of the square trigger.
    pub size: usize,
    pub pixel_value: f64,
    pub source_class: usize,
    pub target_class: usize,
    pub mode: BackdoorMode,
}

impl BackdoorSpec {
    /// Targeted `size`x`size` white square at the top-left corner.
    pub fn targeted(size: usize, source_class: usize, target_class: usize) -> Self {
        Self {
            origin: (0, 0),
            size,
            pixel_value: 1.0,
            source_class,
            target_class,
            mode: BackdoorMode::Targeted,
        }
    }

    pub fn validate(&self, shape: ImageShape, classes: usize) -> Result<()> {
        if self.size == 0 || self.origin.0 + self.size > shape.height || self.origin.1 + self.size > shape.width {
            return Err(Error::input(format!(
                "{}x{} trigger at {:?} does not fit a {}x{} image",
                self.size, self.size, self.origin, shape.height, shape.width
            )));
        }
        if self.source_class >= classes || self.target_class >= classes {
            return Err(Error::input("backdoor classes outside the label range"));
        }
        if self.mode == BackdoorMode::Targeted && self.source_class == self.target_class {
            return Err(Error::input("targeted backdoor needs distinct source and target classes"));
        }
        Ok(())
    }

    fn stamp(&self, pixels: &mut [f64], shape: ImageShape) {
        let (r0, c0) = self.origin;
        for ch in 0..shape.channels {
            for r in r0..r0 + self.size {
                let row = (ch * shape.height + r) * shape.width;
                pixels[row + c0..row + c0 + self.size].fill(self.pixel_value);
            }
        }
    }
}

/// Stamps the trigger on every channel; the label is left unchanged.
pub fn apply_trigger(img: &LabeledImage, spec: &BackdoorSpec) -> Result<LabeledImage> {
    let shape = img.shape;
    if spec.size == 0 || spec.origin.0 + spec.size > shape.height || spec.origin.1 + spec.size > shape.width {
        return Err(Error::input("trigger does not fit inside the image"));
    }
    let mut out = img.clone();
    spec.stamp(&mut out.pixels, shape);
    Ok(out)
}

/// Triggers and relabels `floor(p * |source items|)` seeded-random source-class
/// items; every other item is returned untouched.
pub fn poison_dataset(ds: &Dataset, spec: &BackdoorSpec, p: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::input(format!("poison fraction {p} outside [0, 1]")));
    }
    let mut source: Vec<usize> = ds
        .items
        .iter()
        .enumerate()
        .filter(|(_, i)| i.label == spec.source_class)
        .map(|(idx, _)| idx)
        .collect();
    let count = (p * source.len() as f64).floor() as usize;
    let mut out = ds.clone();
    if count == 0 {
        return Ok(out);
    }
    if let Some(shape) = ds.shape() {
        spec.validate(shape, ds.class_count)?;
    }
    let mut rng = rng_from(seed);
    source.shuffle(&mut rng);
    let mut chosen = source[..count].to_vec();
    chosen.sort_unstable();
    let mut label_rng = match spec.mode {
        BackdoorMode::Untargeted { seed: s } => Some(rng_from(mix(s, seed))),
        BackdoorMode::Targeted => None,
    };
    for idx in chosen {
        let item = &mut out.items[idx];
        spec.stamp(&mut item.pixels, item.shape);
        item.label = match label_rng.as_mut() {
            None => spec.target_class,
            Some(r) => {
                let l = r.random_range(0..ds.class_count - 1);
                if l >= spec.source_class {
                    l + 1
                } else {
                    l
                }
            }
        };
    }
    Ok(out)
}

/// Every source-class item of `test` with the trigger applied; labels keep
/// their original (source) value.
pub fn backdoor_testset(test: &Dataset, spec: &BackdoorSpec) -> Result<Dataset> {
    let items: Vec<LabeledImage> = test
        .items
        .iter()
        .filter(|i| i.label == spec.source_class)
        .map(|i| apply_trigger(i, spec))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::input(format!(
            "test set has no items of source class {}",
            spec.source_class
        )));
    }
    Ok(Dataset::new(items, test.class_count))
}
