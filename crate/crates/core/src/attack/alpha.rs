use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which per-round signal feeds the balance coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Side-channel membership estimate `v_t`.
    #[default]
    Bsci,
    /// Attack success rate measured by the attacker on its own triggered samples.
    Asr,
}

/// Rolling history of success signals for the adaptive attacker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveState {
    pub window: usize,
    pub history: Vec<f64>,
    pub mode: AlphaMode,
}

impl AdaptiveState {
    pub fn new(window: usize, mode: AlphaMode) -> Result<Self> {
        if window == 0 {
            return Err(Error::config("alpha window must be at least 1"));
        }
        Ok(Self {
            window,
            history: Vec::new(),
            mode,
        })
    }

    /// Appends a signal, clamped to `[0, 1]`.
    pub fn push(&mut self, signal: f64) {
        self.history.push(signal.clamp(0.0, 1.0));
    }

    pub fn alpha(&self) -> f64 {
        compute_alpha(self)
    }
}

fn window_mean(history: &[f64], window: usize) -> Option<f64> {
    if history.is_empty() {
        return None;
    }
    let take = window.max(1).min(history.len());
    let tail = &history[history.len() - take..];
    Some(tail.iter().sum::<f64>() / take as f64)
}

/// `1 - mean(last k signals)`; `1` before any signal has been observed.
pub fn compute_alpha(state: &AdaptiveState) -> f64 {
    match window_mean(&state.history, state.window) {
        None => 1.0,
        Some(m) => (1.0 - m).clamp(0.0, 1.0),
    }
}

/// Same rule, but the history holds attack success rates instead of
/// side-channel estimates.
pub fn compute_alpha_asr(state: &AdaptiveState) -> f64 {
    compute_alpha(state)
}
