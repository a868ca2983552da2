use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{argmax, forward, Model};

use super::RoundRecord;

/// `(benign accuracy, attack success rate)`: accuracy on `clean_test` and the
/// fraction of `backdoor_test` classified as `target`.
pub fn evaluate(model: &Model, clean_test: &Dataset, backdoor_test: &Dataset, target: usize) -> Result<(f64, f64)> {
    if clean_test.is_empty() || backdoor_test.is_empty() {
        return Err(Error::input("evaluation needs non-empty clean and backdoor test sets"));
    }
    let correct = forward(model, &clean_test.inputs())?
        .iter()
        .zip(&clean_test.items)
        .filter(|(logits, item)| argmax(logits) == item.label)
        .count();
    let hits = forward(model, &backdoor_test.inputs())?
        .iter()
        .filter(|logits| argmax(logits) == target)
        .count();
    Ok((
        correct as f64 / clean_test.len() as f64,
        hits as f64 / backdoor_test.len() as f64,
    ))
}

/// One round of a stealth trace for a single client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: usize,
    pub score: f64,
    /// 1-based position of the client's score in ascending order.
    pub rank: usize,
    pub selected: bool,
}

/// Per-round score, rank and selection flag of `client`, for runs whose
/// defense reports both scores and a selected set. Other runs give an empty trace.
pub fn krum_trace(records: &[RoundRecord], client: usize) -> Vec<TracePoint> {
    records
        .iter()
        .filter_map(|r| {
            let scores = r.scores.as_ref()?;
            let selected = r.selected.as_ref()?;
            let score = *scores.get(client)?;
            let rank = 1 + scores
                .iter()
                .enumerate()
                .filter(|&(i, &s)| s < score || (s == score && i < client))
                .count();
            Some(TracePoint {
                t: r.t,
                score,
                rank,
                selected: selected.contains(&client),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabeledImage, ImageShape};
    use crate::nn::{ModelSpec, ParamVector};

    fn constant_model(class: usize) -> Model {
        // Logistic with zero weights and a bias favouring `class`.
        let spec = ModelSpec::logistic(2, 3);
        let mut p = vec![0.0; spec.param_count().unwrap()];
        p[6 + class] = 5.0;
        Model {
            spec,
            params: ParamVector::new(p),
        }
    }

    fn ds(labels: &[usize]) -> Dataset {
        let shape = ImageShape::new(1, 1, 2);
        Dataset::new(
            labels
                .iter()
                .map(|&label| LabeledImage {
                    pixels: vec![0.5, 0.5],
                    shape,
                    label,
                })
                .collect(),
            3,
        )
    }

    #[test]
    fn always_target_model_has_full_asr() {
        let m = constant_model(2);
        let (acc, asr) = evaluate(&m, &ds(&[0, 1, 2, 2]), &ds(&[0, 0, 0]), 2).unwrap();
        assert_eq!(acc, 0.5);
        assert_eq!(asr, 1.0);
        let (_, asr) = evaluate(&constant_model(0), &ds(&[0]), &ds(&[0, 0]), 2).unwrap();
        assert_eq!(asr, 0.0);
        assert!(evaluate(&m, &ds(&[]), &ds(&[0]), 2).is_err());
    }

    #[test]
    fn counting_arithmetic() {
        assert!((163.0f64 / 489.0 - 0.3333).abs() < 1e-4);
    }

    fn record(t: usize, scores: Option<Vec<f64>>, selected: Option<Vec<usize>>) -> RoundRecord {
        RoundRecord {
            t,
            benign_acc: None,
            asr: None,
            v: None,
            alpha: None,
            selected,
            scores,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn trace_extraction() {
        assert!(krum_trace(&[record(1, None, None)], 0).is_empty());
        let recs = vec![
            record(1, Some(vec![5.0, 1.0, 2.0]), Some(vec![1])),
            record(2, Some(vec![0.5, 1.0, 2.0]), Some(vec![0])),
        ];
        let tr = krum_trace(&recs, 0);
        assert_eq!(tr.len(), 2);
        assert_eq!((tr[0].rank, tr[0].selected), (3, false));
        assert_eq!((tr[1].rank, tr[1].selected), (1, true));
        assert!(tr.iter().all(|p| (1..=3).contains(&p.rank)));
    }
}
