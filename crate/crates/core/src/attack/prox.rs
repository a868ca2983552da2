use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamVector;

/// Distance used to keep the malicious model near a reference model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum ProxMetric {
    /// Mean squared coordinate difference, `||p - r||^2 / K`.
    #[default]
    Euclidean,
    /// `1 - cos(p, r)`.
    Cosine,
    /// Mean Huber loss of the coordinate differences.
    Huber { delta: f64 },
}


impl fmt::Display for ProxMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxMetric::Euclidean => write!(f, "l2"),
            ProxMetric::Cosine => write!(f, "cos"),
            ProxMetric::Huber { delta } => write!(f, "huber:{delta}"),
        }
    }
}

impl FromStr for ProxMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("l2" | "euclidean", None) => Ok(ProxMetric::Euclidean),
            ("cos" | "cosine", None) => Ok(ProxMetric::Cosine),
            ("huber", None) => Ok(ProxMetric::Huber { delta: 1.0 }),
            ("huber", Some(d)) => {
                let delta: f64 = d
                    .parse()
                    .map_err(|_| Error::config(format!("bad huber delta {d:?}")))?;
                if !(delta > 0.0) {
                    return Err(Error::config("huber delta must be positive"));
                }
                Ok(ProxMetric::Huber { delta })
            }
            _ => Err(Error::config(format!("unknown proximity metric {s:?}"))),
        }
    }
}

/// Value and gradient (with respect to `params`) of the proximity term.
pub fn prox_value_and_grad(
    metric: ProxMetric,
    params: &ParamVector,
    reference: &ParamVector,
) -> Result<(f64, ParamVector)> {
    params.check_len(reference)?;
    let k = params.len().max(1) as f64;
    let p = params.as_slice();
    let r = reference.as_slice();
    match metric {
        ProxMetric::Euclidean => {
            let mut value = 0.0;
            let grad = p
                .iter()
                .zip(r)
                .map(|(a, b)| {
                    let d = a - b;
                    value += d * d;
                    2.0 * d / k
                })
                .collect();
            Ok((value / k, ParamVector::new(grad)))
        }
        ProxMetric::Cosine => {
            let np = params.norm();
            let nr = reference.norm();
            if np == 0.0 || nr == 0.0 {
                return Err(Error::Numeric("cosine proximity with a zero-norm vector".into()));
            }
            let dot = params.dot(reference);
            let cos = dot / (np * nr);
            // d/dp cos = r / (|p||r|) - cos * p / |p|^2
            let grad = p
                .iter()
                .zip(r)
                .map(|(a, b)| -(b / (np * nr) - cos * a / (np * np)))
                .collect();
            Ok((1.0 - cos, ParamVector::new(grad)))
        }
        ProxMetric::Huber { delta } => {
            if !(delta > 0.0) {
                return Err(Error::config("huber delta must be positive"));
            }
            let mut value = 0.0;
            let grad = p
                .iter()
                .zip(r)
                .map(|(a, b)| {
                    let d = a - b;
                    if d.abs() <= delta {
                        value += 0.5 * d * d;
                        d / k
                    } else {
                        value += delta * (d.abs() - 0.5 * delta);
                        delta * d.signum() / k
                    }
                })
                .collect();
            Ok((value / k, ParamVector::new(grad)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [ProxMetric; 3] = [ProxMetric::Euclidean, ProxMetric::Cosine, ProxMetric::Huber { delta: 1.0 }];

    #[test]
    fn zero_at_reference() {
        let r = ParamVector::new(vec![0.3, -1.2, 2.0]);
        for m in ALL {
            let (v, g) = prox_value_and_grad(m, &r, &r).unwrap();
            assert!(v.abs() < 1e-15, "{m}: {v}");
            assert!(g.as_slice().iter().all(|x| x.abs() < 1e-15), "{m}");
        }
    }

    #[test]
    fn cosine_scale_invariance() {
        let r = ParamVector::new(vec![0.3, -1.2, 2.0]);
        let (v, _) = prox_value_and_grad(ProxMetric::Cosine, &r.scale(2.0), &r).unwrap();
        assert!(v.abs() < 1e-15);
        let p = ParamVector::new(vec![1.0, 0.5, -0.1]);
        let (a, _) = prox_value_and_grad(ProxMetric::Cosine, &p, &r).unwrap();
        let (b, _) = prox_value_and_grad(ProxMetric::Cosine, &p.scale(7.5), &r).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn huber_closed_form() {
        // 0.5 * 0.5^2 = 0.125 and 1 * (3 - 0.5) = 2.5, averaged over K = 2.
        let r = ParamVector::new(vec![0.0, 0.0]);
        let p = ParamVector::new(vec![0.5, 3.0]);
        let (v, g) = prox_value_and_grad(ProxMetric::Huber { delta: 1.0 }, &p, &r).unwrap();
        assert!((v - (0.125 + 2.5) / 2.0).abs() < 1e-15);
        assert_eq!(g.as_slice(), &[0.25, 0.5]);
    }

    #[test]
    fn cosine_zero_norm_is_numeric_error() {
        let z = ParamVector::zeros(3);
        let r = ParamVector::new(vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            prox_value_and_grad(ProxMetric::Cosine, &z, &r),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn parse_metric_names() {
        assert_eq!("l2".parse::<ProxMetric>().unwrap(), ProxMetric::Euclidean);
        assert_eq!("cos".parse::<ProxMetric>().unwrap(), ProxMetric::Cosine);
        assert_eq!("huber:0.5".parse::<ProxMetric>().unwrap(), ProxMetric::Huber { delta: 0.5 });
        assert!("huber:-1".parse::<ProxMetric>().is_err());
        assert!("manhattan".parse::<ProxMetric>().is_err());
    }
}
