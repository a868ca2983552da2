//! Malicious-client logic: vanilla poisoning and the adaptive camouflaged
//! variant driven by a side-channel success signal.

mod alpha;
mod prox;

pub use alpha::{compute_alpha, compute_alpha_asr, AdaptiveState, AlphaMode};
pub use prox::{prox_value_and_grad, ProxMetric};

use serde::{Deserialize, Serialize};

use crate::data::{BackdoorSpec, Dataset};
use crate::error::{Error, Result};
use crate::nn::{train_local, Composite, Model, TrainParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    #[default]
    None,
    /// Plain data poisoning of the malicious shard.
    Vanilla,
    /// Poisoning plus an adaptive proximity term.
    Champ {
        metric: ProxMetric,
        window: usize,
        mode: AlphaMode,
    },
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Vanilla => "vanilla",
            AttackKind::Champ { .. } => "champ",
        }
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, AttackKind::None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub backdoor: BackdoorSpec,
    pub malicious_ids: Vec<usize>,
    /// Fixed multiplier `lambda` on the proximity term, so the malicious loss is
    /// `CE + alpha * lambda * prox`. The metrics are normalised per coordinate,
    /// which leaves them tiny next to the cross-entropy unless scaled back up.
    #[serde(default = "unit_weight")]
    pub prox_weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl AttackConfig {
    pub fn validate(&self, clients: usize) -> Result<()> {
        if self.malicious_ids.len() > clients {
            return Err(Error::config("more malicious clients than clients"));
        }
        if let Some(&bad) = self.malicious_ids.iter().find(|&&id| id >= clients) {
            return Err(Error::config(format!("malicious id {bad} outside 0..{clients}")));
        }
        let mut ids = self.malicious_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.malicious_ids.len() {
            return Err(Error::config("duplicate malicious ids"));
        }
        if !(self.prox_weight >= 0.0 && self.prox_weight.is_finite()) {
            return Err(Error::config("prox_weight must be finite and non-negative"));
        }
        if let AttackKind::Champ { window, metric, .. } = self.kind {
            if window == 0 {
                return Err(Error::config("alpha window must be at least 1"));
            }
            if let ProxMetric::Huber { delta } = metric {
                if !(delta > 0.0) {
                    return Err(Error::config("huber delta must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn is_malicious(&self, id: usize) -> bool {
        self.kind.is_active() && self.malicious_ids.contains(&id)
    }
}

/// Local training on poisoned data with loss `CE + alpha * prox(params, global)`.
///
/// With `alpha == 0` this is exactly vanilla poisoned training.
pub fn malicious_round(
    global: &Model,
    poisoned: &Dataset,
    alpha: f64,
    metric: ProxMetric,
    train: &TrainParams,
    seed: u64,
) -> Result<Model> {
    let composite = Composite {
        alpha,
        metric,
        reference: &global.params,
    };
    train_local(global, poisoned, train, Some(&composite), seed)
}
