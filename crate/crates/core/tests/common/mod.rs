//! Shared helpers for the integration tests: brute-force aggregation
//! references and a finite-difference gradient checker.
#![allow(dead_code)]

use fedbackdoor::nn::{loss_and_grad, Model, ParamVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_updates(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<ParamVector> {
    (0..n)
        .map(|_| ParamVector::new((0..k).map(|_| rng.random_range(-5.0..5.0)).collect()))
        .collect()
}

fn column(updates: &[ParamVector], c: usize) -> Vec<f64> {
    updates.iter().map(|u| u.as_slice()[c]).collect()
}

/// Median by counting: the value(s) with at least half the column on each side.
pub fn oracle_median(updates: &[ParamVector]) -> Vec<f64> {
    let k = updates[0].len();
    (0..k)
        .map(|c| {
            let col = column(updates, c);
            let n = col.len();
            let rank_of = |target: usize| -> f64 {
                // The value whose stable rank equals `target`.
                for (i, &x) in col.iter().enumerate() {
                    let below = col.iter().enumerate().filter(|&(j, &y)| y < x || (y == x && j < i)).count();
                    if below == target {
                        return x;
                    }
                }
                unreachable!()
            };
            if n % 2 == 1 {
                rank_of(n / 2)
            } else {
                (rank_of(n / 2 - 1) + rank_of(n / 2)) / 2.0
            }
        })
        .collect()
}

/// Trimmed mean by repeatedly deleting the current minimum and maximum.
pub fn oracle_trimmed_mean(updates: &[ParamVector], beta: f64) -> Vec<f64> {
    let n = updates.len();
    let t = (beta * n as f64).floor() as usize;
    let k = updates[0].len();
    (0..k)
        .map(|c| {
            let mut col = column(updates, c);
            for _ in 0..t {
                let (imin, _) = col.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &x)| if x < a.1 { (i, x) } else { a });
                col.remove(imin);
                let (imax, _) = col.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &x)| if x > a.1 { (i, x) } else { a });
                col.remove(imax);
            }
            col.iter().sum::<f64>() / col.len() as f64
        })
        .collect()
}

fn sq(a: &ParamVector, b: &ParamVector) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    if items.len() < size {
        return Vec::new();
    }
    let mut out = subsets(&items[1..], size);
    for mut rest in subsets(&items[1..], size - 1) {
        rest.insert(0, items[0]);
        out.push(rest);
    }
    out
}

/// Krum scores over `members` by minimising over every peer subset of size
/// `|members| - f - 2`.
pub fn oracle_krum_scores(updates: &[ParamVector], members: &[usize], f: usize) -> Vec<f64> {
    oracle_scores_nearest(updates, members, members.len() - f - 2)
}

pub fn oracle_scores_nearest(updates: &[ParamVector], members: &[usize], size: usize) -> Vec<f64> {
    members
        .iter()
        .map(|&i| {
            let peers: Vec<usize> = members.iter().copied().filter(|&j| j != i).collect();
            subsets(&peers, size)
                .iter()
                .map(|s| s.iter().map(|&j| sq(&updates[i], &updates[j])).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Positions of the `m` smallest scores; ties go to the earlier position.
pub fn oracle_lowest(scores: &[f64], m: usize) -> Vec<usize> {
    let mut chosen = Vec::new();
    for _ in 0..m {
        let mut best: Option<usize> = None;
        for (i, &s) in scores.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            if best.is_none_or(|b| s < scores[b]) {
                best = Some(i);
            }
        }
        chosen.push(best.unwrap());
    }
    chosen
}

pub fn oracle_mean(vs: &[&ParamVector]) -> Vec<f64> {
    let k = vs[0].len();
    (0..k)
        .map(|c| vs.iter().map(|v| v.as_slice()[c]).sum::<f64>() / vs.len() as f64)
        .collect()
}

/// `(selected, value)` for Krum.
pub fn oracle_krum(updates: &[ParamVector], f: usize) -> (Vec<usize>, Vec<f64>) {
    let all: Vec<usize> = (0..updates.len()).collect();
    let best = oracle_lowest(&oracle_krum_scores(updates, &all, f), 1)[0];
    (vec![best], updates[best].as_slice().to_vec())
}

pub fn oracle_multi_krum(updates: &[ParamVector], m: usize, f: usize) -> (Vec<usize>, Vec<f64>) {
    let all: Vec<usize> = (0..updates.len()).collect();
    let mut sel = oracle_lowest(&oracle_krum_scores(updates, &all, f), m);
    sel.sort();
    let value = oracle_mean(&sel.iter().map(|&i| &updates[i]).collect::<Vec<_>>());
    (sel, value)
}

pub fn oracle_bulyan(updates: &[ParamVector], m: usize, f: usize, beta: f64) -> (Vec<usize>, Vec<f64>) {
    let mut remaining: Vec<usize> = (0..updates.len()).collect();
    let mut sel = Vec::new();
    for _ in 0..m {
        let size = if remaining.len() > f + 2 { remaining.len() - f - 2 } else { 1.min(remaining.len() - 1) };
        let scores = oracle_scores_nearest(updates, &remaining, size);
        let pos = oracle_lowest(&scores, 1)[0];
        sel.push(remaining.remove(pos));
    }
    sel.sort();
    let chosen: Vec<ParamVector> = sel.iter().map(|&i| updates[i].clone()).collect();
    (sel, oracle_trimmed_mean(&chosen, beta))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Worst relative error between the analytic gradient and central differences
/// over `coords` random coordinates. The denominator is floored at `1e-6` so
/// that coordinates with a vanishing gradient are compared absolutely.
pub fn gradient_check(model: &Model, batch: &[&[f64]], labels: &[usize], coords: usize, h: f64, seed: u64) -> f64 {
    let (_, grad) = loss_and_grad(model, batch, labels, None).unwrap();
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..coords {
        let c = r.random_range(0..model.k());
        let mut plus = model.clone();
        plus.params.as_mut_slice()[c] += h;
        let mut minus = model.clone();
        minus.params.as_mut_slice()[c] -= h;
        let lp = loss_and_grad(&plus, batch, labels, None).unwrap().0;
        let lm = loss_and_grad(&minus, batch, labels, None).unwrap().0;
        let fd = (lp - lm) / (2.0 * h);
        let an = grad.as_slice()[c];
        let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

/// Random inputs in `[0, 1]` and labels for a model's input shape.
pub fn random_batch(model: &Model, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let d = model.spec.input_shape.len();
    let xs = (0..n).map(|_| (0..d).map(|_| r.random::<f64>()).collect()).collect();
    let ys = (0..n).map(|_| r.random_range(0..model.classes())).collect();
    (xs, ys)
}
