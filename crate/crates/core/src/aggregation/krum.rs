//! Distance-based selection: Krum, Multi-Krum and Bulyan.

use crate::error::{Error, Result};
use crate::nn::ParamVector;

use super::coordinate::{mean_of, trim_count};
use super::{check_updates, AggregationOutcome};

fn pairwise_sq(updates: &[ParamVector]) -> Vec<Vec<f64>> {
    let n = updates.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = updates[i].dist_sq(&updates[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

fn scores_from(dist: &[Vec<f64>], members: &[usize], f: usize) -> Result<Vec<f64>> {
    let n = members.len();
    if n < f + 3 {
        return Err(Error::config(format!(
            "krum needs N - f - 2 >= 1 (N = {n}, f = {f})"
        )));
    }
    Ok(scores_over(dist, members, n - f - 2))
}

/// Scores against the `nearest` closest peers within `members`.
fn scores_over(dist: &[Vec<f64>], members: &[usize], nearest: usize) -> Vec<f64> {
    members
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = members.iter().filter(|&&j| j != i).map(|&j| dist[i][j]).collect();
            row.sort_by(f64::total_cmp);
            row[..nearest.min(row.len())].iter().sum()
        })
        .collect()
}

/// Sum of squared distances from each update to its `N - f - 2` nearest peers.
pub fn krum_scores(updates: &[ParamVector], f: usize) -> Result<Vec<f64>> {
    check_updates(updates)?;
    let members: Vec<usize> = (0..updates.len()).collect();
    scores_from(&pairwise_sq(updates), &members, f)
}

/// Client indices ordered by ascending score, lowest index first on ties.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    order
}

pub fn krum_agg(updates: &[ParamVector], f: usize) -> Result<AggregationOutcome> {
    let scores = krum_scores(updates, f)?;
    let best = ranked(&scores)[0];
    Ok(AggregationOutcome {
        global: updates[best].clone(),
        selected: Some(vec![best]),
        scores: Some(scores),
        iterations: None,
    })
}

pub fn multi_krum_agg(updates: &[ParamVector], m: usize, f: usize) -> Result<AggregationOutcome> {
    let k = check_updates(updates)?;
    if m == 0 || m > updates.len() {
        return Err(Error::config(format!("multi-krum m = {m} outside 1..={}", updates.len())));
    }
    let scores = krum_scores(updates, f)?;
    let mut selected: Vec<usize> = ranked(&scores).into_iter().take(m).collect();
    selected.sort_unstable();
    let global = mean_of(selected.iter().map(|&i| &updates[i]), k);
    Ok(AggregationOutcome {
        global,
        selected: Some(selected),
        scores: Some(scores),
        iterations: None,
    })
}

/// Selects `m` clients by repeated Krum with removal, then takes the
/// coordinate-wise trimmed mean (fraction `beta`) of the selection.
///
/// Once fewer than `f + 3` candidates remain, each is scored against its
/// `max(1, n - f - 2)` nearest remaining peers; a lone candidate is taken as is.
pub fn bulyan_agg(updates: &[ParamVector], m: usize, f: usize, beta: f64) -> Result<AggregationOutcome> {
    let k = check_updates(updates)?;
    let n = updates.len();
    if n < 2 * f + 1 {
        return Err(Error::config(format!("bulyan needs N - 2f >= 1 (N = {n}, f = {f})")));
    }
    if m == 0 || m > n {
        return Err(Error::config(format!("bulyan m = {m} outside 1..={n}")));
    }
    let dist = pairwise_sq(updates);
    let first_scores = scores_from(&dist, &(0..n).collect::<Vec<_>>(), f)?;
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut selected = Vec::with_capacity(m);
    for _ in 0..m {
        let nearest = remaining.len().saturating_sub(f + 2).max(1);
        let scores = scores_over(&dist, &remaining, nearest);
        let pos = ranked(&scores)[0];
        selected.push(remaining.remove(pos));
    }
    selected.sort_unstable();
    let chosen: Vec<ParamVector> = selected.iter().map(|&i| updates[i].clone()).collect();
    let t = trim_count(beta, chosen.len())?;
    let global = if t == 0 {
        mean_of(&chosen, k)
    } else {
        super::coordinate::trimmed_mean_agg(&chosen, beta)?.global
    };
    Ok(AggregationOutcome {
        global,
        selected: Some(selected),
        scores: Some(first_scores),
        iterations: None,
    })
}
