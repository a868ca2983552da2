use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::aggregation::AggregatorConfig;
use crate::attack::{AlphaMode, AttackConfig, AttackKind, ProxMetric};
use crate::bsci::BsciConfig;
use crate::data::{BackdoorSpec, BlobParams, ImageShape};
use crate::error::{Error, Result};
use crate::nn::{ModelSpec, TrainParams};

/// Where client and test data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// IDX image/label pair. Without an explicit test pair, `test_fraction`
    /// of the (optionally truncated) training file is held out.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        test_images: Option<PathBuf>,
        test_labels: Option<PathBuf>,
        limit: Option<usize>,
        test_fraction: f64,
    },
    /// Gaussian class blobs; `per_class` training and `test_per_class` test
    /// samples per class.
    Synthetic {
        classes: usize,
        per_class: usize,
        test_per_class: usize,
        shape: ImageShape,
        blobs: BlobParams,
    },
}

/// Network family, resolved against the dataset's image shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Mlp { hidden: Vec<usize> },
    FmnistCnn,
    CifarAlexnet,
}

impl ModelKind {
    pub fn resolve(&self, shape: ImageShape, classes: usize) -> Result<ModelSpec> {
        let spec = match self {
            ModelKind::Logistic => ModelSpec::mlp(shape, Vec::new(), classes),
            ModelKind::Mlp { hidden } => ModelSpec::mlp(shape, hidden.clone(), classes),
            ModelKind::FmnistCnn => ModelSpec::fmnist_cnn_scaled(shape, 30, 50, 100, classes),
            ModelKind::CifarAlexnet => {
                if shape != ImageShape::new(3, 32, 32) {
                    return Err(Error::config("the AlexNet layout expects 3x32x32 inputs"));
                }
                ModelSpec::cifar_alexnet_scaled([64, 192, 384, 256, 256], classes)
            }
        };
        spec.param_count()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub clients: usize,
    pub rounds: usize,
    /// Local epochs, learning rate and batch size shared by every client.
    pub train: TrainParams,
    pub model: ModelKind,
    pub dataset: DatasetSource,
    pub attack: AttackConfig,
    pub defense: AggregatorConfig,
    pub bsci: BsciConfig,
    /// Evaluate every `eval_every` rounds (the final round is always evaluated).
    pub eval_every: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    fn base(rounds: usize, lr: f64, window: usize, model: ModelKind, dataset: DatasetSource) -> Self {
        Self {
            clients: 10,
            rounds,
            train: TrainParams {
                epochs: 5,
                lr,
                batch: 64,
            },
            model,
            dataset,
            attack: AttackConfig {
                kind: AttackKind::Champ {
                    metric: ProxMetric::Euclidean,
                    window,
                    mode: AlphaMode::Bsci,
                },
                backdoor: BackdoorSpec::targeted(3, 0, 1),
                malicious_ids: vec![0],
                prox_weight: 1.0,
            },
            defense: AggregatorConfig::Krum { f: 1 },
            bsci: BsciConfig::default(),
            eval_every: 1,
            seed: 0,
        }
    }

    /// Fashion-MNIST regime: 50 rounds, lr 0.1, window 3, the small CNN.
    pub fn fmnist(images: PathBuf, labels: PathBuf, test_images: PathBuf, test_labels: PathBuf) -> Self {
        Self::base(
            50,
            0.1,
            3,
            ModelKind::FmnistCnn,
            DatasetSource::Idx {
                images,
                labels,
                test_images: Some(test_images),
                test_labels: Some(test_labels),
                limit: None,
                test_fraction: 0.0,
            },
        )
    }

    /// CIFAR-10 regime hyperparameters (100 rounds, lr 0.01, window 5, AlexNet)
    /// over a synthetic 3x32x32 fixture.
    pub fn cifar_like() -> Self {
        Self::base(
            100,
            0.01,
            5,
            ModelKind::CifarAlexnet,
            DatasetSource::Synthetic {
                classes: 10,
                per_class: 5000,
                test_per_class: 1000,
                shape: ImageShape::new(3, 32, 32),
                blobs: BlobParams::default(),
            },
        )
    }

    /// Desk-scale profile: 10 clients over 10k synthetic 16x16 images, 20
    /// rounds, a one-hidden-layer MLP. The proximity weight of 1e4 offsets the
    /// per-coordinate averaging of the proximity term over ~8.5k parameters.
    pub fn desk() -> Self {
        let mut cfg = Self::base(
            20,
            0.1,
            3,
            ModelKind::Mlp { hidden: vec![32] },
            DatasetSource::Synthetic {
                classes: 10,
                per_class: 1000,
                test_per_class: 200,
                shape: ImageShape::new(1, 16, 16),
                // Faint, noisy classes on a black frame: the trigger lands on
                // pixels that clean data never lights up.
                blobs: BlobParams {
                    mean_low: 0.4,
                    mean_high: 0.6,
                    noise: 0.2,
                    border: 4,
                },
            },
        );
        cfg.bsci.ref_epochs = 1;
        cfg.attack.prox_weight = 1.0e4;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 {
            return Err(Error::config("need at least one client"));
        }
        if self.rounds == 0 {
            return Err(Error::config("need at least one round"));
        }
        if self.train.epochs == 0 || self.train.batch == 0 || !(self.train.lr > 0.0) {
            return Err(Error::config("local training needs epochs >= 1, batch >= 1, lr > 0"));
        }
        if self.eval_every == 0 {
            return Err(Error::config("eval_every must be at least 1"));
        }
        self.attack.validate(self.clients)?;
        self.defense.validate(self.clients)?;
        if matches!(self.attack.kind, AttackKind::Champ { mode: AlphaMode::Bsci, .. }) {
            self.bsci.validate()?;
        }
        Ok(())
    }

    /// Canonical JSON (keys sorted) used for digests and the config echo.
    pub fn canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string(&value)?)
    }

    /// Stable hex digest of the canonical configuration.
    pub fn digest(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        let hash = Sha256::digest(self.canonical_json()?.as_bytes());
        Ok(hash.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }
}
