use crate::error::{Error, Result};
use crate::nn::ParamVector;

use super::coordinate::mean_of;
use super::{check_updates, AggregationOutcome};

/// Cosine alignment of each client's delta (from `prev_global`) with the mean
/// delta; zero-norm deltas score 0.
pub fn alignment_scores(updates: &[ParamVector], prev_global: &ParamVector) -> Result<Vec<f64>> {
    let k = check_updates(updates)?;
    prev_global.check_len(&updates[0])?;
    let deltas: Vec<ParamVector> = updates.iter().map(|g| g.sub(prev_global)).collect();
    let mean_delta = mean_of(&deltas, k);
    Ok(deltas.iter().map(|d| d.cosine(&mean_delta).unwrap_or(0.0)).collect())
}

/// Drops the `floor(th * N)` most and least aligned clients and averages the rest.
pub fn align_ins_agg(updates: &[ParamVector], prev_global: &ParamVector, th: f64) -> Result<AggregationOutcome> {
    let k = check_updates(updates)?;
    if !(0.0..0.5).contains(&th) {
        return Err(Error::config(format!("alignment threshold {th} outside [0, 0.5)")));
    }
    let scores = alignment_scores(updates, prev_global)?;
    let n = updates.len();
    let t = (th * n as f64).floor() as usize;
    if n <= 2 * t {
        return Err(Error::config("alignment trimming removes every client"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut selected = order[t..n - t].to_vec();
    selected.sort_unstable();
    let global = mean_of(selected.iter().map(|&i| &updates[i]), k);
    Ok(AggregationOutcome {
        global,
        selected: Some(selected),
        scores: Some(scores),
        iterations: None,
    })
}
