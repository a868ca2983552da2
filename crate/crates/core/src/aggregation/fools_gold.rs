//! FoolsGold: down-weights clients whose accumulated update histories are
//! too similar to one another.

use crate::error::{Error, Result};
use crate::nn::ParamVector;

use super::coordinate::mean_of;
use super::{check_updates, AggregationOutcome};

/// Per-client weights in `[0, 1]` from accumulated histories, with
/// pardoning and a unit-confidence logit.
pub fn fools_gold_weights(history: &[ParamVector]) -> Vec<f64> {
    let n = history.len();
    let mut cs = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                cs[i][j] = history[i].cosine(&history[j]).unwrap_or(0.0);
            }
        }
    }
    let maxcs: Vec<f64> = cs.iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && maxcs[i] < maxcs[j] && maxcs[j] > 0.0 {
                cs[i][j] *= maxcs[i] / maxcs[j];
            }
        }
    }
    let mut wv: Vec<f64> = cs
        .iter()
        .map(|row| (1.0 - row.iter().cloned().fold(0.0, f64::max)).clamp(0.0, 1.0))
        .collect();
    let top = wv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return vec![0.0; n];
    }
    for w in &mut wv {
        *w /= top;
        if *w >= 1.0 {
            *w = 0.99;
        }
        let logit = (*w / (1.0 - *w)).ln() + 0.5;
        *w = if logit.is_nan() || logit < 0.0 {
            0.0
        } else if logit > 1.0 {
            1.0
        } else {
            logit
        };
    }
    wv
}

/// Weighted average `sum lambda_n g_n / sum lambda_n`. An empty `history`
/// means no evidence yet: every weight is 1.
pub fn fools_gold_agg(updates: &[ParamVector], history: &[ParamVector]) -> Result<AggregationOutcome> {
    let k = check_updates(updates)?;
    if !history.is_empty() && history.len() != updates.len() {
        return Err(Error::input(format!(
            "{} histories for {} updates",
            history.len(),
            updates.len()
        )));
    }
    let weights = if history.is_empty() {
        vec![1.0; updates.len()]
    } else {
        fools_gold_weights(history)
    };
    let total: f64 = weights.iter().sum();
    let global = if total > 0.0 {
        let mut acc = vec![0.0; k];
        for (w, g) in weights.iter().zip(updates) {
            for (a, b) in acc.iter_mut().zip(g.as_slice()) {
                *a += w * b;
            }
        }
        acc.iter_mut().for_each(|a| *a /= total);
        ParamVector::new(acc)
    } else {
        mean_of(updates, k)
    };
    Ok(AggregationOutcome {
        global,
        selected: None,
        scores: Some(weights),
        iterations: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::fed_avg;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec())
    }

    #[test]
    fn identical_histories_get_zero_weight() {
        let h = vec![pv(&[1.0, 2.0, 3.0]); 2];
        assert_eq!(fools_gold_weights(&h), vec![0.0, 0.0]);
    }

    #[test]
    fn orthogonal_histories_keep_full_weight() {
        let h: Vec<_> = (0..4)
            .map(|i| {
                let mut v = vec![0.0; 4];
                v[i] = 1.0 + i as f64;
                v[(i + 1) % 4] = 1e-3;
                pv(&v)
            })
            .collect();
        for w in fools_gold_weights(&h) {
            assert!(w > 0.99, "{w}");
        }
    }

    #[test]
    fn empty_history_is_fedavg() {
        let ups = vec![pv(&[1.0, 0.0]), pv(&[0.0, 3.0]), pv(&[2.0, 2.0])];
        let out = fools_gold_agg(&ups, &[]).unwrap();
        let avg = fed_avg(&ups).unwrap().global;
        for (a, b) in out.global.as_slice().iter().zip(avg.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(out.scores, Some(vec![1.0; 3]));
    }

    #[test]
    fn sybils_are_suppressed() {
        let mut h: Vec<_> = (0..5)
            .map(|i| {
                let mut v = vec![0.1; 6];
                v[i] = 2.0;
                pv(&v)
            })
            .collect();
        h.push(pv(&[0.0, 0.0, 0.0, 0.0, 0.0, 5.0]));
        h.push(pv(&[0.0, 0.0, 0.0, 0.0, 0.0, 5.0]));
        let w = fools_gold_weights(&h);
        assert_eq!(w[5], 0.0);
        assert_eq!(w[6], 0.0);
        assert!(w[..5].iter().all(|&x| x > 0.5), "{w:?}");
    }
}
