//! Kernel support-vector classifier trained by sequential minimal
//! optimisation with second-order working-set selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Polynomial kernel `(gamma * <x, y> + coef0)^degree`.
    pub degree: u32,
    pub gamma: f64,
    pub coef0: f64,
    /// Box constraint.
    pub c: f64,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Hard cap on SMO iterations.
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            degree: 3,
            gamma: 1.0,
            coef0: 1.0,
            c: 1.0,
            tol: 1e-3,
            max_iter: 200_000,
        }
    }
}

impl SvmConfig {
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        (self.gamma * dot + self.coef0).powi(self.degree as i32)
    }
}

/// Trained classifier over prediction vectors; `decision > 0` means member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipClassifier {
    pub support: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub kernel: SvmConfig,
}

impl MembershipClassifier {
    pub fn decision(&self, z: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * self.kernel.kernel(sv, z))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, z: &[f64]) -> bool {
        self.decision(z) > 0.0
    }

    /// Classifier that answers `member` for every input (bias only).
    pub fn constant(member: bool, kernel: SvmConfig) -> Self {
        Self {
            support: Vec::new(),
            dual_coef: Vec::new(),
            bias: if member { 1.0 } else { -1.0 },
            kernel,
        }
    }
}

/// Solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoTrace {
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective `sum alpha - 1/2 alpha' Q alpha` after each iteration.
    pub dual_objective: Vec<f64>,
}

pub fn train_svm(points: &[Vec<f64>], members: &[bool], cfg: &SvmConfig) -> Result<MembershipClassifier> {
    train_svm_traced(points, members, cfg).map(|(m, _)| m)
}

pub fn train_svm_traced(
    points: &[Vec<f64>],
    members: &[bool],
    cfg: &SvmConfig,
) -> Result<(MembershipClassifier, SmoTrace)> {
    let n = points.len();
    if n != members.len() {
        return Err(Error::input("points and labels differ in length"));
    }
    if !members.iter().any(|&m| m) || members.iter().all(|&m| m) {
        return Err(Error::input("membership classifier needs both member and non-member records"));
    }
    if !(cfg.c > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::config("svm C and tol must be positive"));
    }
    let y: Vec<f64> = members.iter().map(|&m| if m { 1.0 } else { -1.0 }).collect();
    let mut kmat = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = cfg.kernel(&points[i], &points[j]);
            kmat[i * n + j] = v;
            kmat[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| y[i] * y[j] * kmat[i * n + j];
    let c = cfg.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let is_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut trace = SmoTrace {
        iterations: 0,
        converged: false,
        dual_objective: Vec::new(),
    };
    while trace.iterations < cfg.max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if is_up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !is_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i_sel == usize::MAX {
                continue;
            }
            let b = gmax - v;
            if b > 0.0 {
                let a = kmat[i_sel * n + i_sel] + kmat[t * n + t] - 2.0 * kmat[i_sel * n + t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j_sel = t;
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || gmax - gmin < cfg.tol {
            trace.converged = true;
            break;
        }
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = {
                let v = q(i, i) + q(j, j) + 2.0 * q(i, j);
                if v > 0.0 { v } else { TAU }
            };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = {
                let v = q(i, i) + q(j, j) - 2.0 * q(i, j);
                if v > 0.0 { v } else { TAU }
            };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
        trace.iterations += 1;
        // f(alpha) = 1/2 alpha'Q alpha - e'alpha = 1/2 sum alpha_t (G_t - 1)
        let f: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() * 0.5;
        trace.dual_objective.push(-f);
    }

    // Offset: average y*G over free vectors, else midpoint of the feasible range.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };

    let mut support = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support.push(points[t].clone());
            dual_coef.push(alpha[t] * y[t]);
        }
    }
    Ok((
        MembershipClassifier {
            support,
            dual_coef,
            bias: -rho,
            kernel: *cfg,
        },
        trace,
    ))
}
