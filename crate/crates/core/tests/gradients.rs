mod common;

use common::{gradient_check, random_batch};
use fedbackdoor::attack::{prox_value_and_grad, ProxMetric};
use fedbackdoor::nn::{ImageShape, ModelSpec, ParamVector};
use rand::Rng;

fn check(spec: ModelSpec, batch: usize, seed: u64) -> f64 {
    let model = spec.init(seed).unwrap();
    let (xs, ys) = random_batch(&model, batch, seed + 1);
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    gradient_check(&model, &refs, &ys, 100, 1e-5, seed + 2)
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let err = check(ModelSpec::logistic(12, 4), 8, 1);
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn small_mlp_gradient_matches_finite_differences() {
    // 16 -> 10 -> 4: 170 + 44 = 214 parameters.
    let spec = ModelSpec::mlp(ImageShape::new(1, 4, 4), vec![10], 4);
    assert!((190..=230).contains(&spec.param_count().unwrap()));
    let err = check(spec, 8, 2);
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn deep_mlp_gradient_matches_finite_differences() {
    let spec = ModelSpec::mlp(ImageShape::new(1, 5, 5), vec![12, 8], 3);
    let err = check(spec, 6, 3);
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn reduced_fmnist_cnn_gradient_matches_finite_differences() {
    let spec = ModelSpec::fmnist_cnn_scaled(ImageShape::new(1, 28, 28), 3, 4, 10, 10);
    let err = check(spec, 3, 4);
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn reduced_alexnet_gradient_matches_finite_differences() {
    let spec = ModelSpec::cifar_alexnet_scaled([3, 4, 4, 4, 3], 10);
    let err = check(spec, 2, 5);
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn prox_gradients_match_finite_differences() {
    let mut rng = common::rng(9);
    let p = ParamVector::new((0..20).map(|_| rng.random_range(-2.0..2.0)).collect());
    let r = ParamVector::new((0..20).map(|_| rng.random_range(-2.0..2.0)).collect());
    for metric in [ProxMetric::Euclidean, ProxMetric::Cosine, ProxMetric::Huber { delta: 1.0 }] {
        let (_, g) = prox_value_and_grad(metric, &p, &r).unwrap();
        for c in 0..p.len() {
            let h = 1e-6;
            let mut a = p.clone();
            a.as_mut_slice()[c] += h;
            let mut b = p.clone();
            b.as_mut_slice()[c] -= h;
            let fd = (prox_value_and_grad(metric, &a, &r).unwrap().0 - prox_value_and_grad(metric, &b, &r).unwrap().0)
                / (2.0 * h);
            let an = g.as_slice()[c];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            assert!(rel < 1e-6, "{metric}: coordinate {c}: {fd} vs {an}");
        }
    }
}
