//! Backdoor side-channel inference.
//!
//! Each round the attacker splits its data into `R` shards, poisons them at
//! graded levels, fine-tunes one reference model per shard from the current
//! global model, and fits a kernel SVM that tells "poisoned model" prediction
//! vectors from "clean model" ones on triggered inputs. Applying that
//! classifier to the global model's predictions yields `v_t`, the fraction of
//! triggered samples the global model appears to have absorbed.

mod appendix;
mod svm;

pub use appendix::{appendix_a_experiment, appendix_a_experiment_on, AppendixConfig, AppendixReport, ConditionReport, Confusion};
pub use svm::{train_svm, train_svm_traced, MembershipClassifier, SmoTrace, SvmConfig};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{apply_trigger, partition_iid, poison_dataset, BackdoorSpec, Dataset};
use crate::error::{Error, Result};
use crate::nn::{Model, TrainParams};
use crate::rng::mix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsciConfig {
    /// Poison fraction of each reference shard; its length is `R`.
    pub p_levels: Vec<f64>,
    /// Local epochs used to fine-tune each reference model.
    pub ref_epochs: usize,
    pub svm: SvmConfig,
}

impl Default for BsciConfig {
    fn default() -> Self {
        Self {
            p_levels: vec![0.3, 0.2, 0.1, 0.0, 0.0, 0.0],
            ref_epochs: 1,
            svm: SvmConfig::default(),
        }
    }
}

impl BsciConfig {
    pub fn r(&self) -> usize {
        self.p_levels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_levels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("poison levels must lie in [0, 1]"));
        }
        if !self.p_levels.contains(&0.0) || !self.p_levels.iter().any(|&p| p > 0.0) {
            return Err(Error::config("poison levels need at least one zero and one positive entry"));
        }
        Ok(())
    }
}

/// One training record for the membership classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipRecord {
    pub z: Vec<f64>,
    pub member: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideChannelSignal {
    pub v: f64,
    pub round: usize,
    pub sample_count: usize,
    pub members: usize,
}

/// Seeded split into `r` disjoint near-equal shards.
pub fn split_reference(data: &Dataset, r: usize, seed: u64) -> Result<Vec<Dataset>> {
    if data.len() < r {
        return Err(Error::input(format!("{} items cannot fill {r} reference shards", data.len())));
    }
    partition_iid(data, r, seed)
}

/// Poisons shard `r` at `p_levels[r]` and fine-tunes a copy of `init` on it.
/// The flag marks models trained with a positive poison level.
pub fn train_reference_models(
    init: &Model,
    shards: &[Dataset],
    p_levels: &[f64],
    spec: &BackdoorSpec,
    train: &TrainParams,
    seed: u64,
) -> Result<Vec<(Model, bool)>> {
    if shards.len() != p_levels.len() {
        return Err(Error::input(format!(
            "{} shards for {} poison levels",
            shards.len(),
            p_levels.len()
        )));
    }
    shards
        .par_iter()
        .zip(p_levels.par_iter())
        .enumerate()
        .map(|(r, (shard, &p))| {
            let poisoned = poison_dataset(shard, spec, p, mix(seed, 2 * r as u64))?;
            let model = if train.epochs == 0 {
                init.clone()
            } else {
                crate::nn::train_local(init, &poisoned, train, None, mix(seed, 2 * r as u64 + 1))?
            };
            Ok((model, p > 0.0))
        })
        .collect()
}

/// Triggered copies of every source-class item of `data`.
pub fn probe_set(data: &Dataset, spec: &BackdoorSpec) -> Result<Dataset> {
    let items = data
        .items
        .iter()
        .filter(|i| i.label == spec.source_class)
        .map(|i| apply_trigger(i, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(items, data.class_count))
}

/// One `(softmax output, membership bit)` record per model and sample.
pub fn collect_attack_dataset(ref_models: &[(Model, bool)], backdoored: &Dataset) -> Result<Vec<MembershipRecord>> {
    let inputs = backdoored.inputs();
    let mut records = Vec::with_capacity(ref_models.len() * inputs.len());
    for (model, member) in ref_models {
        for z in model.probabilities(&inputs)? {
            records.push(MembershipRecord { z, member: *member });
        }
    }
    Ok(records)
}

pub fn train_membership_classifier(records: &[MembershipRecord], cfg: &SvmConfig) -> Result<MembershipClassifier> {
    let points: Vec<Vec<f64>> = records.iter().map(|r| r.z.clone()).collect();
    let labels: Vec<bool> = records.iter().map(|r| r.member).collect();
    train_svm(&points, &labels, cfg)
}

/// Fraction of triggered samples whose global-model prediction the
/// classifier labels as coming from a poisoned model.
pub fn infer_v(global: &Model, backdoored: &Dataset, clf: &MembershipClassifier, round: usize) -> Result<SideChannelSignal> {
    if backdoored.is_empty() {
        return Err(Error::input("no triggered samples to probe with"));
    }
    let probs = global.probabilities(&backdoored.inputs())?;
    let members = probs.iter().filter(|z| clf.predict(z)).count();
    Ok(SideChannelSignal {
        v: members as f64 / probs.len() as f64,
        round,
        sample_count: probs.len(),
        members,
    })
}

/// The full per-round probe: split, poison, fine-tune reference models from
/// `global`, fit the classifier, and score `global`.
pub fn run_bsci_round(
    global: &Model,
    malicious_data: &Dataset,
    cfg: &BsciConfig,
    spec: &BackdoorSpec,
    train: &TrainParams,
    round: usize,
    seed: u64,
) -> Result<SideChannelSignal> {
    cfg.validate()?;
    let probes = probe_set(malicious_data, spec)?;
    if probes.is_empty() {
        return Err(Error::input("malicious client holds no source-class samples"));
    }
    let shards = split_reference(malicious_data, cfg.r(), mix(seed, 0xB5C1))?;
    let ref_train = TrainParams {
        epochs: cfg.ref_epochs,
        ..*train
    };
    let models = train_reference_models(global, &shards, &cfg.p_levels, spec, &ref_train, mix(seed, 0xB5C2))?;
    let records = collect_attack_dataset(&models, &probes)?;
    let clf = train_membership_classifier(&records, &cfg.svm)?;
    infer_v(global, &probes, &clf, round)
}
