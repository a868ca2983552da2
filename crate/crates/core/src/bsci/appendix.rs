//! Shadow-model membership inference with and without a backdoor trigger on
//! the source class, used to show that triggered members leak more.

use serde::{Deserialize, Serialize};

use crate::data::{apply_trigger, gen_synthetic_with, partition_iid, BackdoorSpec, BlobParams, Dataset, ImageShape};
use crate::error::{Error, Result};
use crate::nn::{train_local, Model, ModelSpec, TrainParams};
use crate::rng::mix;

use super::svm::{train_svm, MembershipClassifier, SvmConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixConfig {
    pub seed: u64,
    pub shape: ImageShape,
    pub classes: usize,
    /// Synthetic pool size per class.
    pub per_class: usize,
    pub blobs: BlobParams,
    pub hidden: Vec<usize>,
    pub train: TrainParams,
    pub shadows: usize,
    pub source_class: usize,
    pub trigger_size: usize,
    pub svm: SvmConfig,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            shape: ImageShape::new(1, 16, 16),
            classes: 10,
            per_class: 300,
            blobs: BlobParams {
                mean_low: 0.4,
                mean_high: 0.6,
                noise: 0.2,
                border: 4,
            },
            hidden: vec![32],
            train: TrainParams {
                epochs: 10,
                lr: 0.1,
                batch: 64,
            },
            shadows: 2,
            source_class: 0,
            trigger_size: 3,
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_member: usize,
    pub false_member: usize,
    pub true_nonmember: usize,
    pub false_nonmember: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub backdoored: bool,
    pub confusion: Confusion,
    /// `(false positive rate, true positive rate)` from `(0,0)` to `(1,1)`.
    pub roc: Vec<(f64, f64)>,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub clean: ConditionReport,
    pub backdoored: ConditionReport,
}

pub fn appendix_a_experiment(cfg: &AppendixConfig) -> Result<AppendixReport> {
    let pool = gen_synthetic_with(cfg.seed, cfg.classes, cfg.per_class, cfg.shape, cfg.blobs);
    appendix_a_experiment_on(cfg, &pool)
}

/// Runs both conditions on a caller-supplied data pool.
pub fn appendix_a_experiment_on(cfg: &AppendixConfig, pool: &Dataset) -> Result<AppendixReport> {
    let shape = pool.shape().ok_or_else(|| Error::input("empty data pool"))?;
    let trigger = BackdoorSpec::targeted(cfg.trigger_size, cfg.source_class, (cfg.source_class + 1) % pool.class_count);
    trigger.validate(shape, pool.class_count)?;
    let spec = ModelSpec::mlp(shape, cfg.hidden.clone(), pool.class_count);
    let models = cfg.shadows + 1;
    // One in-set and one out-set per model, shared by both conditions.
    let parts = partition_iid(pool, 2 * models, mix(cfg.seed, 1))?;
    Ok(AppendixReport {
        clean: run_condition(cfg, &spec, &parts, &trigger, false)?,
        backdoored: run_condition(cfg, &spec, &parts, &trigger, true)?,
    })
}

struct Queries {
    members: Vec<Vec<f64>>,
    nonmembers: Vec<Vec<f64>>,
}

fn train_and_query(
    cfg: &AppendixConfig,
    spec: &ModelSpec,
    in_set: &Dataset,
    out_set: &Dataset,
    trigger: &BackdoorSpec,
    backdoored: bool,
    seed: u64,
) -> Result<Queries> {
    let mut train_set = in_set.clone();
    if backdoored {
        for item in &mut train_set.items {
            if item.label == trigger.source_class {
                *item = apply_trigger(item, trigger)?;
            }
        }
    }
    let init: Model = spec.init(mix(seed, 0))?;
    let model = train_local(&init, &train_set, &cfg.train, None, mix(seed, 1))?;
    fn source<'a>(d: &'a Dataset, trigger: &BackdoorSpec) -> Vec<&'a [f64]> {
        d.items
            .iter()
            .filter(|i| i.label == trigger.source_class)
            .map(|i| i.pixels.as_slice())
            .collect()
    }
    Ok(Queries {
        members: model.probabilities(&source(&train_set, trigger))?,
        nonmembers: model.probabilities(&source(out_set, trigger))?,
    })
}

fn run_condition(
    cfg: &AppendixConfig,
    spec: &ModelSpec,
    parts: &[Dataset],
    trigger: &BackdoorSpec,
    backdoored: bool,
) -> Result<ConditionReport> {
    let tag = u64::from(backdoored) << 32;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for s in 1..=cfg.shadows {
        let q = train_and_query(cfg, spec, &parts[2 * s], &parts[2 * s + 1], trigger, backdoored, mix(cfg.seed, tag | (10 + s as u64)))?;
        labels.extend(std::iter::repeat_n(true, q.members.len()));
        labels.extend(std::iter::repeat_n(false, q.nonmembers.len()));
        points.extend(q.members);
        points.extend(q.nonmembers);
    }
    let clf = train_svm(&points, &labels, &cfg.svm)?;
    let target = train_and_query(cfg, spec, &parts[0], &parts[1], trigger, backdoored, mix(cfg.seed, tag | 3))?;
    Ok(evaluate(&clf, &target, backdoored))
}

fn evaluate(clf: &MembershipClassifier, q: &Queries, backdoored: bool) -> ConditionReport {
    let pos: Vec<f64> = q.members.iter().map(|z| clf.decision(z)).collect();
    let neg: Vec<f64> = q.nonmembers.iter().map(|z| clf.decision(z)).collect();
    let confusion = Confusion {
        true_member: pos.iter().filter(|&&d| d > 0.0).count(),
        false_nonmember: pos.iter().filter(|&&d| d <= 0.0).count(),
        false_member: neg.iter().filter(|&&d| d > 0.0).count(),
        true_nonmember: neg.iter().filter(|&&d| d <= 0.0).count(),
    };
    let roc = roc_curve(&pos, &neg);
    ConditionReport {
        backdoored,
        confusion,
        auc: auc(&roc),
        roc,
    }
}

/// ROC points sweeping the threshold from `+inf` down, grouping tied scores.
pub fn roc_curve(pos: &[f64], neg: &[f64]) -> Vec<(f64, f64)> {
    let mut scored: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (pos.len().max(1) as f64, neg.len().max(1) as f64);
    let mut roc = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let s = scored[i].0;
        while i < scored.len() && scored[i].0 == s {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        roc.push((fp as f64 / nn, tp as f64 / np));
    }
    if roc.last() != Some(&(1.0, 1.0)) {
        roc.push((1.0, 1.0));
    }
    roc
}

/// Trapezoidal area under a ROC curve.
pub fn auc(roc: &[(f64, f64)]) -> f64 {
    roc.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}
