use rand::seq::SliceRandom;

use crate::attack::{prox_value_and_grad, ProxMetric};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from;

use super::engine::{self, Workspace};
use super::spec::Layer;
use super::{Model, ParamVector};

/// Proximal regulariser added to the cross-entropy: `alpha * prox(params, reference)`.
#[derive(Debug, Clone, Copy)]
pub struct Composite<'a> {
    pub alpha: f64,
    pub metric: ProxMetric,
    pub reference: &'a ParamVector,
}

/// Local optimisation hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainParams {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
}

/// Mean cross-entropy over the batch plus the optional proximal term, and its
/// gradient with respect to every parameter.
pub fn loss_and_grad(
    model: &Model,
    batch: &[&[f64]],
    labels: &[usize],
    composite: Option<&Composite<'_>>,
) -> Result<(f64, ParamVector)> {
    let layers = model.spec.plan()?;
    let mut ws = Workspace::new(&layers, model.spec.input_shape.len());
    let mut grad = vec![0.0; model.k()];
    let loss = accumulate(&layers, model, batch, labels, composite, &mut ws, &mut grad)?;
    Ok((loss, ParamVector::new(grad)))
}

fn accumulate(
    layers: &[Layer],
    model: &Model,
    batch: &[&[f64]],
    labels: &[usize],
    composite: Option<&Composite<'_>>,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> Result<f64> {
    if batch.is_empty() || batch.len() != labels.len() {
        return Err(Error::input(format!(
            "batch of {} inputs with {} labels",
            batch.len(),
            labels.len()
        )));
    }
    let classes = model.classes();
    let d = model.spec.input_shape.len();
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut g_logits = vec![0.0; classes];
    for (x, &y) in batch.iter().zip(labels) {
        if y >= classes {
            return Err(Error::input(format!("label {y} outside {classes} classes")));
        }
        if x.len() != d {
            return Err(Error::input(format!("input has {} values, expected {d}", x.len())));
        }
        engine::forward(layers, model.params.as_slice(), x, ws);
        let logits = ws.logits();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += (log_z - logits[y]) * inv_b;
        for (c, g) in g_logits.iter_mut().enumerate() {
            *g = (logits[c] - log_z).exp() * inv_b;
        }
        g_logits[y] -= inv_b;
        engine::backward(layers, model.params.as_slice(), ws, &g_logits, grad);
    }
    if let Some(c) = composite {
        if c.alpha != 0.0 {
            let (v, g) = prox_value_and_grad(c.metric, &model.params, c.reference)?;
            loss += c.alpha * v;
            for (gi, pi) in grad.iter_mut().zip(g.as_slice()) {
                *gi += c.alpha * pi;
            }
        }
    }
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss {loss}")));
    }
    Ok(loss)
}

/// `params - lr * grad`
pub fn sgd_step(model: &Model, grad: &ParamVector, lr: f64) -> Model {
    let mut out = model.clone();
    sgd_in_place(&mut out.params, grad.as_slice(), lr);
    out
}

fn sgd_in_place(params: &mut ParamVector, grad: &[f64], lr: f64) {
    for (p, g) in params.as_mut_slice().iter_mut().zip(grad) {
        *p -= lr * g;
    }
}

/// Mini-batch SGD over `data` for `epochs` passes, reshuffling each epoch from
/// a stream seeded by `seed`.
pub fn train_local(
    model: &Model,
    data: &Dataset,
    params: &TrainParams,
    composite: Option<&Composite<'_>>,
    seed: u64,
) -> Result<Model> {
    if data.is_empty() {
        return Err(Error::input("cannot train on an empty dataset"));
    }
    if params.batch == 0 {
        return Err(Error::config("batch size must be positive"));
    }
    if let Some(c) = composite {
        model.params.check_len(c.reference)?;
    }
    let layers = model.spec.plan()?;
    let mut ws = Workspace::new(&layers, model.spec.input_shape.len());
    let mut out = model.clone();
    let mut grad = vec![0.0; out.k()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = rng_from(seed);
    let mut xs: Vec<&[f64]> = Vec::with_capacity(params.batch);
    let mut ys: Vec<usize> = Vec::with_capacity(params.batch);
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for (bi, chunk) in order.chunks(params.batch).enumerate() {
            xs.clear();
            ys.clear();
            for &i in chunk {
                xs.push(&data.items[i].pixels);
                ys.push(data.items[i].label);
            }
            grad.fill(0.0);
            accumulate(&layers, &out, &xs, &ys, composite, &mut ws, &mut grad).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}, batch {bi}: {m}")),
                other => other,
            })?;
            sgd_in_place(&mut out.params, &grad, params.lr);
        }
    }
    Ok(out)
}
