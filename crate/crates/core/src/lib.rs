//! Deterministic federated-learning simulator for studying backdoor poisoning
//! against Byzantine-robust aggregation.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a small double-precision model engine (logistic, MLP and two CNNs)
//!   with SGD training and flat parameter vectors.
//! - [`data`]: IDX loading, a synthetic blob generator, IID partitioning and
//!   trigger-based poisoning.
//! - [`aggregation`]: FedAvg plus nine robust rules.
//! - [`attack`]: proximity losses, the adaptive balance coefficient and the
//!   malicious client's local training.
//! - [`bsci`]: the backdoor side-channel probe (reference models + SVM).
//! - [`sim`]: the round orchestrator and evaluation.
//! - [`report`]: JSONL/CSV export and summaries; [`cli`] wires everything to
//!   the command line.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod attack;
pub mod bsci;
pub mod cli;
pub mod data;
pub mod error;
pub mod nn;
pub mod report;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
