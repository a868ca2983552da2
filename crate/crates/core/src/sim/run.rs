use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::aggregate;
use crate::attack::{malicious_round, AdaptiveState, AlphaMode, AttackKind};
use crate::bsci::{probe_set, run_bsci_round};
use crate::data::{backdoor_testset, load_idx, partition_iid, poison_dataset, gen_synthetic_split, Dataset};
use crate::error::{Error, Result};
use crate::nn::{train_local, Model, ParamVector};
use crate::rng::{Domain, SeedTree};

use super::eval::evaluate;
use super::{DatasetSource, ExperimentConfig};

/// Everything measured in one global round. Fields that a configuration does
/// not produce (no evaluation this round, no adaptive attacker, a rule without
/// selection) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub benign_acc: Option<f64>,
    pub asr: Option<f64>,
    pub v: Option<f64>,
    pub alpha: Option<f64>,
    pub selected: Option<Vec<usize>>,
    pub scores: Option<Vec<f64>>,
    /// Kept out of the serialized form so that output files are reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub records: Vec<RoundRecord>,
    pub final_model: Model,
}

/// Training and held-out test data for a configuration.
pub fn load_datasets(source: &DatasetSource, seed: u64) -> Result<(Dataset, Dataset)> {
    match source {
        DatasetSource::Synthetic {
            classes,
            per_class,
            test_per_class,
            shape,
            blobs,
        } => {
            if *classes < 2 || *per_class == 0 || *test_per_class == 0 {
                return Err(Error::config("synthetic data needs >= 2 classes and non-empty splits"));
            }
            let train = gen_synthetic_split(seed, 0, *classes, *per_class, *shape, *blobs);
            let test = gen_synthetic_split(seed, 1, *classes, *test_per_class, *shape, *blobs);
            Ok((train, test))
        }
        DatasetSource::Idx {
            images,
            labels,
            test_images,
            test_labels,
            limit,
            test_fraction,
        } => {
            let mut train = load_idx(images, labels)?;
            if let Some(n) = limit {
                train = train.take(*n);
            }
            let test = match (test_images, test_labels) {
                (Some(ti), Some(tl)) => load_idx(ti, tl)?,
                (None, None) => {
                    if !(*test_fraction > 0.0 && *test_fraction < 1.0) {
                        return Err(Error::config("without a test file pair, test_fraction must be in (0, 1)"));
                    }
                    let held = ((train.len() as f64) * test_fraction).round() as usize;
                    let split = train.len() - held;
                    let test = Dataset::new(train.items[split..].to_vec(), train.class_count);
                    train = train.take(split);
                    test
                }
                _ => return Err(Error::config("test images and labels must be given together")),
            };
            if train.is_empty() || test.is_empty() {
                return Err(Error::input("training and test sets must be non-empty"));
            }
            if train.shape() != test.shape() {
                return Err(Error::input("training and test images differ in shape"));
            }
            let classes = train.class_count.max(test.class_count);
            Ok((Dataset::new(train.items, classes), Dataset::new(test.items, classes)))
        }
    }
}

/// Runs the configured experiment end to end.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let seeds = SeedTree::new(cfg.seed);
    let (train, test) = load_datasets(&cfg.dataset, seeds.seed(Domain::Data, 0, 0))?;
    run_experiment_with(cfg, &train, &test)
}

/// Same as [`run_experiment`] over already-loaded data.
pub fn run_experiment_with(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<ExperimentResult> {
    cfg.validate()?;
    let shape = train.shape().ok_or_else(|| Error::input("empty training set"))?;
    let classes = train.class_count;
    let spec = cfg.model.resolve(shape, classes)?;
    let backdoor = cfg.attack.backdoor;
    backdoor.validate(shape, classes)?;
    let seeds = SeedTree::new(cfg.seed);

    let shards = partition_iid(train, cfg.clients, seeds.seed(Domain::Partition, 0, 0))?;
    let backdoor_test = backdoor_testset(test, &backdoor)?;
    if backdoor_test.is_empty() {
        return Err(Error::input("test set holds no source-class samples"));
    }

    // Training sets are fixed for the whole run; only the malicious shards
    // are ever poisoned.
    let attacking = cfg.attack.kind.is_active();
    let local_data: Vec<Dataset> = shards
        .iter()
        .enumerate()
        .map(|(id, shard)| {
            if attacking && cfg.attack.is_malicious(id) {
                poison_dataset(shard, &backdoor, 1.0, seeds.seed(Domain::Poison, id as u64, 0))
            } else {
                Ok(shard.clone())
            }
        })
        .collect::<Result<_>>()?;

    let (metric, mut adaptive) = match cfg.attack.kind {
        AttackKind::Champ { metric, window, mode } => {
            let states = cfg
                .attack
                .malicious_ids
                .iter()
                .map(|_| AdaptiveState::new(window, mode))
                .collect::<Result<Vec<_>>>()?;
            (Some(metric), states)
        }
        _ => (None, Vec::new()),
    };

    let mut global = spec.init(seeds.seed(Domain::Init, 0, 0))?;
    let mut history: Vec<ParamVector> = Vec::new();
    let mut records = Vec::with_capacity(cfg.rounds);

    for t in 1..=cfg.rounds {
        let started = Instant::now();
        let round = (|| -> Result<RoundRecord> {
            // Attacker feedback from the broadcast model, before any training.
            let mut alphas = vec![None; cfg.clients];
            let mut signal = None;
            if let Some(_metric) = metric {
                for (slot, &id) in cfg.attack.malicious_ids.iter().enumerate() {
                    let state = &mut adaptive[slot];
                    if t > 1 {
                        let v = match state.mode {
                            AlphaMode::Bsci => {
                                run_bsci_round(
                                    &global,
                                    &shards[id],
                                    &cfg.bsci,
                                    &backdoor,
                                    &cfg.train,
                                    t,
                                    seeds.seed(Domain::Bsci, t as u64, id as u64),
                                )?
                                .v
                            }
                            AlphaMode::Asr => {
                                let probes = probe_set(&shards[id], &backdoor)?;
                                if probes.is_empty() {
                                    return Err(Error::input("malicious client holds no source-class samples"));
                                }
                                let hits = probes
                                    .items
                                    .iter()
                                    .map(|i| global.predict(&i.pixels))
                                    .collect::<Result<Vec<_>>>()?
                                    .into_iter()
                                    .filter(|&c| c == backdoor.target_class)
                                    .count();
                                hits as f64 / probes.len() as f64
                            }
                        };
                        state.push(v);
                        signal.get_or_insert(v);
                    }
                    alphas[id] = Some(state.alpha());
                }
            }

            let locals: Vec<Model> = (0..cfg.clients)
                .into_par_iter()
                .map(|id| {
                    let seed = seeds.seed(Domain::ClientShuffle, t as u64, id as u64);
                    match (metric, alphas[id]) {
                        (Some(metric), Some(alpha)) => {
                            malicious_round(&global, &local_data[id], alpha * cfg.attack.prox_weight, metric, &cfg.train, seed)
                        }
                        _ => train_local(&global, &local_data[id], &cfg.train, None, seed),
                    }
                })
                .collect::<Result<_>>()?;
            let updates: Vec<ParamVector> = locals.into_iter().map(|m| m.params).collect();

            if history.is_empty() {
                history = vec![ParamVector::zeros(global.k()); cfg.clients];
            }
            for (h, u) in history.iter_mut().zip(&updates) {
                h.axpy(1.0, &u.sub(&global.params));
            }
            let outcome = aggregate(&cfg.defense, &updates, Some(&global.params), &history)?;
            if !outcome.global.is_finite() {
                return Err(Error::Numeric("aggregated model has non-finite parameters".into()));
            }
            global = Model {
                spec: global.spec.clone(),
                params: outcome.global,
            };

            let (benign_acc, asr) = if t % cfg.eval_every == 0 || t == cfg.rounds {
                let (a, s) = evaluate(&global, test, &backdoor_test, backdoor.target_class)?;
                (Some(a), Some(s))
            } else {
                (None, None)
            };
            let first_alpha = cfg.attack.malicious_ids.first().and_then(|&id| alphas[id]);
            Ok(RoundRecord {
                t,
                benign_acc,
                asr,
                v: signal,
                alpha: first_alpha,
                selected: outcome.selected,
                scores: outcome.scores,
                wall_time_s: 0.0,
            })
        })();
        let mut record = round.map_err(|e| e.in_round(t))?;
        record.wall_time_s = started.elapsed().as_secs_f64();
        records.push(record);
    }
    Ok(ExperimentResult {
        records,
        final_model: global,
    })
}
