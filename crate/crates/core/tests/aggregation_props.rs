mod common;

use common::*;
use fedbackdoor::aggregation::*;
use fedbackdoor::nn::ParamVector;
use proptest::prelude::*;

fn updates_strategy() -> impl Strategy<Value = Vec<ParamVector>> {
    (4usize..=8, 2usize..=6).prop_flat_map(|(n, k)| {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, k), n)
            .prop_map(|rows| rows.into_iter().map(ParamVector::new).collect())
    })
}

/// No two clients at the same distance from a third, no repeated coordinate.
fn tie_free(updates: &[ParamVector]) -> bool {
    let n = updates.len();
    let mut d = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            d.push(updates[i].dist_sq(&updates[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    let distinct = |v: &[f64]| v.windows(2).all(|w| (w[1] - w[0]).abs() > 1e-9);
    let columns_ok = (0..updates[0].len()).all(|c| {
        let mut col: Vec<f64> = updates.iter().map(|u| u.as_slice()[c]).collect();
        col.sort_by(f64::total_cmp);
        distinct(&col)
    });
    let mut scores = krum_scores(updates, 1).unwrap();
    scores.sort_by(f64::total_cmp);
    distinct(&d) && columns_ok && distinct(&scores)
}

fn rules(n: usize) -> Vec<AggregatorConfig> {
    let mut out = vec![
        AggregatorConfig::FedAvg,
        AggregatorConfig::Median,
        AggregatorConfig::TrimmedMean { beta: 0.2 },
        AggregatorConfig::Krum { f: 1 },
        AggregatorConfig::MultiKrum { m: 3, f: 1 },
        AggregatorConfig::Rfa {
            max_iter: 10,
            eps: 1e-10,
            tol: 1e-5,
        },
    ];
    if n >= 4 {
        out.push(AggregatorConfig::Bulyan { m: 3, f: 1, beta: 0.2 });
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn brute_force_references_agree(updates in updates_strategy()) {
        let n = updates.len();
        let med = median_agg(&updates).unwrap().global;
        prop_assert!(max_abs_diff(med.as_slice(), &oracle_median(&updates)) < 1e-9);
        let tm = trimmed_mean_agg(&updates, 0.2).unwrap().global;
        prop_assert!(max_abs_diff(tm.as_slice(), &oracle_trimmed_mean(&updates, 0.2)) < 1e-9);
        let all: Vec<usize> = (0..n).collect();
        let scores = krum_scores(&updates, 1).unwrap();
        prop_assert!(max_abs_diff(&scores, &oracle_krum_scores(&updates, &all, 1)) < 1e-9);
        let k = krum_agg(&updates, 1).unwrap();
        let (sel, val) = oracle_krum(&updates, 1);
        prop_assert_eq!(k.selected.unwrap(), sel);
        prop_assert!(max_abs_diff(k.global.as_slice(), &val) < 1e-9);
        let mk = multi_krum_agg(&updates, 3, 1).unwrap();
        let (sel, val) = oracle_multi_krum(&updates, 3, 1);
        prop_assert_eq!(mk.selected.unwrap(), sel);
        prop_assert!(max_abs_diff(mk.global.as_slice(), &val) < 1e-9);
        let b = bulyan_agg(&updates, 3, 1, 0.2).unwrap();
        let (sel, val) = oracle_bulyan(&updates, 3, 1, 0.2);
        prop_assert_eq!(b.selected.unwrap(), sel);
        prop_assert!(max_abs_diff(b.global.as_slice(), &val) < 1e-9);
    }

    #[test]
    fn order_of_clients_does_not_matter(updates in updates_strategy(), rot in 0usize..8) {
        // Exact ties are broken by client index, which a permutation changes.
        prop_assume!(tie_free(&updates));
        let n = updates.len();
        let mut shuffled = updates.clone();
        shuffled.rotate_left(rot % n);
        for rule in rules(n) {
            // Bulyan's later Krum passes over few candidates score against one
            // nearest peer, where mutual neighbours tie by construction.
            if matches!(rule, AggregatorConfig::Bulyan { .. }) && n < 7 {
                continue;
            }
            let a = aggregate(&rule, &updates, None, &[]).unwrap().global;
            let b = aggregate(&rule, &shuffled, None, &[]).unwrap().global;
            prop_assert!(max_abs_diff(a.as_slice(), b.as_slice()) < 1e-9, "{}", rule);
        }
    }

    #[test]
    fn shifting_every_update_shifts_the_result(updates in updates_strategy(), shift in -3.0f64..3.0) {
        let n = updates.len();
        let k = updates[0].len();
        let c = ParamVector::new((0..k).map(|i| shift * (i as f64 + 1.0)).collect());
        let moved: Vec<ParamVector> = updates.iter().map(|u| u.add(&c)).collect();
        for rule in rules(n) {
            let a = aggregate(&rule, &updates, None, &[]).unwrap().global;
            let b = aggregate(&rule, &moved, None, &[]).unwrap().global;
            let tol = if matches!(rule, AggregatorConfig::Rfa { .. }) { 1e-6 } else { 1e-9 };
            prop_assert!(max_abs_diff(a.add(&c).as_slice(), b.as_slice()) < tol, "{}", rule);
        }
    }

    #[test]
    fn identical_updates_are_a_fixed_point(v in prop::collection::vec(-5.0f64..5.0, 1..6), n in 4usize..9) {
        let v = ParamVector::new(v);
        let updates = vec![v.clone(); n];
        for rule in rules(n) {
            let g = aggregate(&rule, &updates, Some(&v), &[]).unwrap().global;
            prop_assert!(max_abs_diff(g.as_slice(), v.as_slice()) < 1e-12, "{}", rule);
        }
    }
}

#[test]
fn multi_krum_edge_cases() {
    let mut r = rng(4);
    let ups = random_updates(&mut r, 7, 3);
    let all = multi_krum_agg(&ups, 7, 1).unwrap().global;
    let avg = fed_avg(&ups).unwrap().global;
    assert!(max_abs_diff(all.as_slice(), avg.as_slice()) < 1e-12);
    let one = multi_krum_agg(&ups, 1, 1).unwrap();
    let k = krum_agg(&ups, 1).unwrap();
    assert_eq!(one.selected, k.selected);
    assert_eq!(one.global, k.global);
}

#[test]
fn bulyan_drops_a_gross_outlier() {
    let mut r = rng(5);
    let mut ups = random_updates(&mut r, 10, 4);
    ups[6] = ParamVector::new(vec![1e4; 4]);
    let out = bulyan_agg(&ups, 8, 1, 0.2).unwrap();
    assert!(!out.selected.unwrap().contains(&6));
}

#[test]
fn weiszfeld_objective_never_increases() {
    let mut r = rng(6);
    for _ in 0..20 {
        let ups = random_updates(&mut r, 9, 5);
        let gm = geometric_median(&ups, 50, 1e-10, 0.0).unwrap();
        for w in gm.objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", gm.objectives);
        }
    }
}
