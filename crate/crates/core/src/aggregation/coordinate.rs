//! Coordinate-wise rules: mean, median, trimmed mean.

use crate::error::{Error, Result};
use crate::nn::ParamVector;

use super::{check_updates, AggregationOutcome};

/// Mean of the given vectors, summed in slice order.
pub(crate) fn mean_of<'a>(vectors: impl IntoIterator<Item = &'a ParamVector>, k: usize) -> ParamVector {
    let mut acc = vec![0.0; k];
    let mut n = 0usize;
    for v in vectors {
        for (a, b) in acc.iter_mut().zip(v.as_slice()) {
            *a += b;
        }
        n += 1;
    }
    let inv = 1.0 / n.max(1) as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    ParamVector::new(acc)
}

pub fn fed_avg(updates: &[ParamVector]) -> Result<AggregationOutcome> {
    let k = check_updates(updates)?;
    Ok(AggregationOutcome::global(mean_of(updates, k)))
}

fn per_coordinate(updates: &[ParamVector], k: usize, f: impl Fn(&mut [f64]) -> f64) -> ParamVector {
    let mut column = vec![0.0; updates.len()];
    let out = (0..k)
        .map(|c| {
            for (slot, u) in column.iter_mut().zip(updates) {
                *slot = u[c];
            }
            column.sort_by(f64::total_cmp);
            f(&mut column)
        })
        .collect();
    ParamVector::new(out)
}

pub fn median_agg(updates: &[ParamVector]) -> Result<AggregationOutcome> {
    let k = check_updates(updates)?;
    let g = per_coordinate(updates, k, |sorted| {
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    });
    Ok(AggregationOutcome::global(g))
}

/// Number of values trimmed from each end for fraction `beta` of `n`.
pub(crate) fn trim_count(beta: f64, n: usize) -> Result<usize> {
    if !(0.0..0.5).contains(&beta) {
        return Err(Error::config(format!("trim fraction {beta} outside [0, 0.5)")));
    }
    let t = (beta * n as f64).floor() as usize;
    if n <= 2 * t {
        return Err(Error::config(format!("trimming {t} from each end leaves nothing of {n}")));
    }
    Ok(t)
}

pub(crate) fn trim_count_check(beta: f64, n: usize) -> Result<()> {
    trim_count(beta, n).map(|_| ())
}

pub fn trimmed_mean_agg(updates: &[ParamVector], beta: f64) -> Result<AggregationOutcome> {
    let k = check_updates(updates)?;
    let t = trim_count(beta, updates.len())?;
    let g = per_coordinate(updates, k, |sorted| {
        let kept = &sorted[t..sorted.len() - t];
        kept.iter().sum::<f64>() / kept.len() as f64
    });
    Ok(AggregationOutcome::global(g))
}
