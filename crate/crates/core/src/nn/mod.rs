//! Minimal double-precision model engine.

mod checkpoint;
mod engine;
mod params;
mod spec;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use params::ParamVector;
pub use spec::{Architecture, ImageShape, LayerShape, ModelSpec};
pub use train::{loss_and_grad, sgd_step, train_local, Composite, TrainParams};

use crate::error::{Error, Result};
use engine::Workspace;

/// A model: architecture plus its flat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: ParamVector,
}

impl Model {
    pub fn classes(&self) -> usize {
        self.spec.classes()
    }

    pub fn k(&self) -> usize {
        self.params.len()
    }

    /// Predicted class for a single input (lowest index on ties).
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let logits = forward(self, &[x])?;
        Ok(argmax(&logits[0]))
    }

    /// Softmax prediction vectors for a batch.
    pub fn probabilities(&self, batch: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        Ok(forward(self, batch)?.iter().map(|r| softmax(r)).collect())
    }
}

/// Flattens a model into its parameter vector.
pub fn flatten(model: &Model) -> ParamVector {
    model.params.clone()
}

/// Rebuilds a model from a spec and a parameter vector of matching length.
pub fn unflatten(spec: &ModelSpec, params: ParamVector) -> Result<Model> {
    let k = spec.param_count()?;
    if params.len() != k {
        return Err(Error::input(format!(
            "parameter vector has {} coordinates, spec expects {}",
            params.len(),
            k
        )));
    }
    Ok(Model {
        spec: spec.clone(),
        params,
    })
}

/// Logits for every input in `batch`.
pub fn forward(model: &Model, batch: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let layers = model.spec.plan()?;
    let d = model.spec.input_shape.len();
    if model.params.len() != model.spec.param_count()? {
        return Err(Error::input("model parameters do not match its spec"));
    }
    let mut ws = Workspace::new(&layers, d);
    let mut out = Vec::with_capacity(batch.len());
    for (i, x) in batch.iter().enumerate() {
        if x.len() != d {
            return Err(Error::input(format!(
                "input {i} has {} values, expected {d}",
                x.len()
            )));
        }
        engine::forward(&layers, model.params.as_slice(), x, &mut ws);
        out.push(ws.logits().to_vec());
    }
    Ok(out)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logistic_gives_zero_logits() {
        let m = ModelSpec::logistic(4, 3).zeros().unwrap();
        let x = [0.3, 0.1, 0.9, 1.0];
        let logits = forward(&m, &[&x, &x]).unwrap();
        assert_eq!(logits, vec![vec![0.0; 3]; 2]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        for row in [vec![0.0, 1.0, -3.0], vec![1000.0, -1000.0, 3.5, 2.0], vec![1e-9]] {
            let s: f64 = softmax(&row).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fmnist_cnn_shapes_match_table() {
        let spec = ModelSpec::fmnist_cnn();
        let shapes: Vec<Vec<usize>> = spec.layer_shapes().unwrap().into_iter().map(|s| s.shape).collect();
        assert_eq!(
            shapes,
            vec![
                vec![30, 28, 28],
                vec![30, 14, 14],
                vec![50, 14, 14],
                vec![50, 7, 7],
                vec![2450],
                vec![100],
                vec![10]
            ]
        );
        let m = spec.init(1).unwrap();
        let x = vec![0.5; 28 * 28];
        let logits = forward(&m, &[&x]).unwrap();
        assert_eq!(logits[0].len(), 10);
        assert!(logits[0].iter().all(|v| v.is_finite()));
    }

    #[test]
    fn alexnet_shapes_match_table() {
        let spec = ModelSpec::cifar_alexnet();
        let shapes: Vec<Vec<usize>> = spec.layer_shapes().unwrap().into_iter().map(|s| s.shape).collect();
        assert_eq!(
            shapes,
            vec![
                vec![64, 8, 8],
                vec![64, 4, 4],
                vec![192, 4, 4],
                vec![192, 2, 2],
                vec![384, 2, 2],
                vec![256, 2, 2],
                vec![256, 2, 2],
                vec![256, 1, 1],
                vec![256],
                vec![10]
            ]
        );
    }

    #[test]
    fn input_shape_mismatch_is_rejected() {
        let m = ModelSpec::logistic(4, 2).zeros().unwrap();
        assert!(matches!(forward(&m, &[&[0.0; 3]]), Err(Error::Input(_))));
    }

    #[test]
    fn flatten_round_trip_is_exact() {
        for spec in [ModelSpec::fmnist_cnn(), ModelSpec::cifar_alexnet()] {
            let m = spec.init(3).unwrap();
            let back = unflatten(&spec, flatten(&m)).unwrap();
            assert_eq!(back, m);
            assert_eq!(spec.init(3).unwrap().params, m.params);
        }
    }

    #[test]
    fn unflatten_rejects_wrong_length() {
        let spec = ModelSpec::logistic(3, 2);
        assert!(unflatten(&spec, ParamVector::zeros(7)).is_err());
    }
}
