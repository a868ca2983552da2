//! Smoothed Weiszfeld iteration for the geometric median.

use crate::error::Result;
use crate::nn::ParamVector;

use super::coordinate::mean_of;
use super::{check_updates, AggregationOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricMedian {
    pub point: ParamVector,
    pub iterations: usize,
    /// `sum_n ||v - g_n||` at the start point and after every iteration.
    pub objectives: Vec<f64>,
}

fn objective(v: &ParamVector, updates: &[ParamVector]) -> f64 {
    updates.iter().map(|g| v.dist(g)).sum()
}

/// Starts at the mean and iterates `v <- sum w_n g_n / sum w_n` with
/// `w_n = 1 / max(eps, ||v - g_n||)` until the step is shorter than `tol` or
/// `max_iter` iterations have run.
pub fn geometric_median(updates: &[ParamVector], max_iter: usize, eps: f64, tol: f64) -> Result<GeometricMedian> {
    let k = check_updates(updates)?;
    let mut v = mean_of(updates, k);
    let mut objectives = vec![objective(&v, updates)];
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let weights: Vec<f64> = updates.iter().map(|g| 1.0 / v.dist(g).max(eps)).collect();
        let total: f64 = weights.iter().sum();
        let mut next = vec![0.0; k];
        for (w, g) in weights.iter().zip(updates) {
            for (a, b) in next.iter_mut().zip(g.as_slice()) {
                *a += w * b;
            }
        }
        next.iter_mut().for_each(|a| *a /= total);
        let next = ParamVector::new(next);
        let step = next.dist(&v);
        v = next;
        objectives.push(objective(&v, updates));
        if step < tol {
            break;
        }
    }
    Ok(GeometricMedian {
        point: v,
        iterations,
        objectives,
    })
}

pub fn rfa_agg(updates: &[ParamVector], max_iter: usize, eps: f64, tol: f64) -> Result<AggregationOutcome> {
    let gm = geometric_median(updates, max_iter, eps, tol)?;
    Ok(AggregationOutcome {
        global: gm.point,
        selected: None,
        scores: None,
        iterations: Some(gm.iterations),
    })
}
