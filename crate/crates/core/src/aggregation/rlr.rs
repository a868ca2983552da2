use crate::error::Result;
use crate::nn::ParamVector;

use super::coordinate::mean_of;
use super::{check_updates, AggregationOutcome};

/// Per-coordinate sign agreement `|sum_n sign(g_nk - prev_k)|`.
pub fn sign_agreement(updates: &[ParamVector], prev_global: &ParamVector) -> Result<Vec<f64>> {
    let k = check_updates(updates)?;
    prev_global.check_len(&updates[0])?;
    Ok((0..k)
        .map(|c| {
            updates
                .iter()
                .map(|g| {
                    let d = g[c] - prev_global[c];
                    if d > 0.0 {
                        1.0
                    } else if d < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                .abs()
        })
        .collect())
}

/// Robust learning rate: the averaged delta keeps learning rate `+lr` where
/// at least `theta` clients agree in sign and is reversed (`-lr`) elsewhere.
pub fn rlr_agg(updates: &[ParamVector], prev_global: &ParamVector, theta: f64, lr: f64) -> Result<AggregationOutcome> {
    let k = check_updates(updates)?;
    let agreement = sign_agreement(updates, prev_global)?;
    let deltas: Vec<ParamVector> = updates.iter().map(|g| g.sub(prev_global)).collect();
    let mean_delta = mean_of(&deltas, k);
    let global = (0..k)
        .map(|c| {
            let rate = if agreement[c] >= theta { lr } else { -lr };
            prev_global[c] + rate * mean_delta[c]
        })
        .collect();
    Ok(AggregationOutcome::global(ParamVector::new(global)))
}
