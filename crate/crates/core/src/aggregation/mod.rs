//! Server-side aggregation rules.
//!
//! Every rule is a pure function over the clients' full model vectors. Rules
//! that need a direction reference (RLR, AlignIns) also take the previous
//! global model; FoolsGold takes the clients' accumulated update histories.
//! Ties are always broken towards the lowest client index.

mod align_ins;
mod coordinate;
mod fools_gold;
mod krum;
mod rfa;
mod rlr;

pub use align_ins::{align_ins_agg, alignment_scores};
pub use coordinate::{fed_avg, median_agg, trimmed_mean_agg};
pub use fools_gold::{fools_gold_agg, fools_gold_weights};
pub use krum::{bulyan_agg, krum_agg, krum_scores, multi_krum_agg};
pub use rfa::{geometric_median, rfa_agg, GeometricMedian};
pub use rlr::{rlr_agg, sign_agreement};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamVector;

/// Aggregation rule and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
#[derive(Default)]
pub enum AggregatorConfig {
    #[default]
    FedAvg,
    Median,
    TrimmedMean { beta: f64 },
    Krum { f: usize },
    MultiKrum { m: usize, f: usize },
    Bulyan { m: usize, f: usize, beta: f64 },
    Rfa { max_iter: usize, eps: f64, tol: f64 },
    AlignIns { th: f64 },
    Rlr { c: f64, theta: f64, lr: f64 },
    FoolsGold,
}


/// Result of one aggregation, with whatever introspection the rule provides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationOutcome {
    pub global: ParamVector,
    /// Clients that entered the final average (selection-based rules).
    pub selected: Option<Vec<usize>>,
    /// Krum scores, alignment scores or FoolsGold weights, per client.
    pub scores: Option<Vec<f64>>,
    /// Weiszfeld iterations (RFA).
    pub iterations: Option<usize>,
}

impl AggregationOutcome {
    pub(crate) fn global(global: ParamVector) -> Self {
        Self {
            global,
            selected: None,
            scores: None,
            iterations: None,
        }
    }
}

/// Checks that `updates` is non-empty with a shared length; returns it.
pub(crate) fn check_updates(updates: &[ParamVector]) -> Result<usize> {
    let first = updates
        .first()
        .ok_or_else(|| Error::input("no client updates to aggregate"))?;
    let k = first.len();
    if let Some((i, u)) = updates.iter().enumerate().find(|(_, u)| u.len() != k) {
        return Err(Error::input(format!(
            "update {i} has {} coordinates, expected {k}",
            u.len()
        )));
    }
    Ok(k)
}

impl AggregatorConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AggregatorConfig::FedAvg => "fedavg",
            AggregatorConfig::Median => "median",
            AggregatorConfig::TrimmedMean { .. } => "trimmed_mean",
            AggregatorConfig::Krum { .. } => "krum",
            AggregatorConfig::MultiKrum { .. } => "multi_krum",
            AggregatorConfig::Bulyan { .. } => "bulyan",
            AggregatorConfig::Rfa { .. } => "rfa",
            AggregatorConfig::AlignIns { .. } => "align_ins",
            AggregatorConfig::Rlr { .. } => "rlr",
            AggregatorConfig::FoolsGold => "fools_gold",
        }
    }

    /// Default parameters for a rule name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "fedavg" => AggregatorConfig::FedAvg,
            "median" => AggregatorConfig::Median,
            "trimmed_mean" | "trimmed-mean" | "tm" => AggregatorConfig::TrimmedMean { beta: 0.2 },
            "krum" => AggregatorConfig::Krum { f: 1 },
            "multi_krum" | "multi-krum" | "mkrum" => AggregatorConfig::MultiKrum { m: 3, f: 1 },
            "bulyan" => AggregatorConfig::Bulyan { m: 3, f: 1, beta: 0.2 },
            "rfa" => AggregatorConfig::Rfa {
                max_iter: 10,
                eps: 1e-10,
                tol: 1e-5,
            },
            "align_ins" | "alignins" | "dai" => AggregatorConfig::AlignIns { th: 0.1 },
            "rlr" => AggregatorConfig::Rlr {
                c: 1.0,
                theta: 1.0,
                lr: 1.0,
            },
            "fools_gold" | "foolsgold" => AggregatorConfig::FoolsGold,
            other => return Err(Error::config(format!("unknown defense {other:?}"))),
        })
    }

    /// Every rule with its default parameters.
    pub fn all_defaults() -> Vec<Self> {
        [
            "fedavg",
            "median",
            "trimmed_mean",
            "krum",
            "multi_krum",
            "bulyan",
            "rfa",
            "align_ins",
            "rlr",
            "fools_gold",
        ]
        .iter()
        .map(|n| Self::by_name(n).unwrap())
        .collect()
    }

    /// Whether the rule reports a selected client set every round.
    pub fn reports_selection(&self) -> bool {
        matches!(
            self,
            AggregatorConfig::Krum { .. }
                | AggregatorConfig::MultiKrum { .. }
                | AggregatorConfig::Bulyan { .. }
                | AggregatorConfig::AlignIns { .. }
        )
    }

    /// Parameter checks that depend on the number of clients.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        match *self {
            AggregatorConfig::TrimmedMean { beta } => {
                coordinate::trim_count_check(beta, n)?;
            }
            AggregatorConfig::Krum { f } if n < f + 3 => return bad(format!("krum needs N - f - 2 >= 1 (N = {n}, f = {f})")),
            AggregatorConfig::MultiKrum { m, f } => {
                if n < f + 3 {
                    return bad(format!("multi-krum needs N - f - 2 >= 1 (N = {n}, f = {f})"));
                }
                if m == 0 || m > n {
                    return bad(format!("multi-krum m = {m} outside 1..={n}"));
                }
            }
            AggregatorConfig::Bulyan { m, f, beta } => {
                if n < 2 * f + 1 {
                    return bad(format!("bulyan needs N - 2f >= 1 (N = {n}, f = {f})"));
                }
                if m == 0 || n + 1 < m + f + 3 {
                    return bad(format!("bulyan cannot select m = {m} by krum-with-removal from N = {n}, f = {f}"));
                }
                coordinate::trim_count_check(beta, m)?;
            }
            AggregatorConfig::Rfa { max_iter, eps, tol } => {
                if max_iter == 0 || !(eps > 0.0) || !(tol >= 0.0) {
                    return bad("rfa needs max_iter >= 1, eps > 0, tol >= 0".into());
                }
            }
            AggregatorConfig::AlignIns { th }
                if !(th > 0.0 && th < 0.5) => {
                    return bad(format!("alignment threshold {th} outside (0, 0.5)"));
                }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for AggregatorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AggregatorConfig::TrimmedMean { beta } => write!(f, "trimmed_mean:beta={beta}"),
            AggregatorConfig::Krum { f: ff } => write!(f, "krum:f={ff}"),
            AggregatorConfig::MultiKrum { m, f: ff } => write!(f, "multi_krum:m={m},f={ff}"),
            AggregatorConfig::Bulyan { m, f: ff, beta } => write!(f, "bulyan:m={m},f={ff},beta={beta}"),
            AggregatorConfig::Rfa { max_iter, eps, tol } => {
                write!(f, "rfa:max_iter={max_iter},eps={eps},tol={tol}")
            }
            AggregatorConfig::AlignIns { th } => write!(f, "align_ins:th={th}"),
            AggregatorConfig::Rlr { c, theta, lr } => write!(f, "rlr:c={c},theta={theta},lr={lr}"),
            other => write!(f, "{}", other.name()),
        }
    }
}

/// Parses `<name>[:k=v,...]`; unspecified parameters keep their defaults.
impl FromStr for AggregatorConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, a),
            None => (s, ""),
        };
        let mut cfg = Self::by_name(name)?;
        for kv in args.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value, got {kv:?}")))?;
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| Error::config(format!("bad value {v:?} for {key}")))
            };
            let int = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .map_err(|_| Error::config(format!("bad integer {v:?} for {key}")))
            };
            let unknown = || Error::config(format!("{name} has no parameter {key:?}"));
            match (&mut cfg, key) {
                (AggregatorConfig::TrimmedMean { beta }, "beta") => *beta = num(value)?,
                (AggregatorConfig::Krum { f }, "f") => *f = int(value)?,
                (AggregatorConfig::MultiKrum { m, .. }, "m") => *m = int(value)?,
                (AggregatorConfig::MultiKrum { f, .. }, "f") => *f = int(value)?,
                (AggregatorConfig::Bulyan { m, .. }, "m") => *m = int(value)?,
                (AggregatorConfig::Bulyan { f, .. }, "f") => *f = int(value)?,
                (AggregatorConfig::Bulyan { beta, .. }, "beta") => *beta = num(value)?,
                (AggregatorConfig::Rfa { max_iter, .. }, "max_iter" | "iters") => *max_iter = int(value)?,
                (AggregatorConfig::Rfa { eps, .. }, "eps") => *eps = num(value)?,
                (AggregatorConfig::Rfa { tol, .. }, "tol") => *tol = num(value)?,
                (AggregatorConfig::AlignIns { th }, "th") => *th = num(value)?,
                (AggregatorConfig::Rlr { c, .. }, "c") => *c = num(value)?,
                (AggregatorConfig::Rlr { theta, .. }, "theta") => *theta = num(value)?,
                (AggregatorConfig::Rlr { lr, .. }, "lr") => *lr = num(value)?,
                _ => return Err(unknown()),
            }
        }
        Ok(cfg)
    }
}

/// Dispatches to the configured rule.
///
/// `prev_global` is required by RLR and AlignIns; `history` is the per-client
/// accumulated update history used by FoolsGold (empty slice = no history).
pub fn aggregate(
    cfg: &AggregatorConfig,
    updates: &[ParamVector],
    prev_global: Option<&ParamVector>,
    history: &[ParamVector],
) -> Result<AggregationOutcome> {
    let need_prev = || prev_global.ok_or_else(|| Error::input(format!("{} needs the previous global model", cfg.name())));
    match *cfg {
        AggregatorConfig::FedAvg => fed_avg(updates),
        AggregatorConfig::Median => median_agg(updates),
        AggregatorConfig::TrimmedMean { beta } => trimmed_mean_agg(updates, beta),
        AggregatorConfig::Krum { f } => krum_agg(updates, f),
        AggregatorConfig::MultiKrum { m, f } => multi_krum_agg(updates, m, f),
        AggregatorConfig::Bulyan { m, f, beta } => bulyan_agg(updates, m, f, beta),
        AggregatorConfig::Rfa { max_iter, eps, tol } => rfa_agg(updates, max_iter, eps, tol),
        AggregatorConfig::AlignIns { th } => align_ins_agg(updates, need_prev()?, th),
        AggregatorConfig::Rlr { theta, lr, .. } => rlr_agg(updates, need_prev()?, theta, lr),
        AggregatorConfig::FoolsGold => fools_gold_agg(updates, history),
    }
}
