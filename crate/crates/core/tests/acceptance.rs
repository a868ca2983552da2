//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints one PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::time::Instant;

use common::*;
use fedbackdoor::aggregation::*;
use fedbackdoor::attack::{compute_alpha, AdaptiveState, AlphaMode, AttackKind, ProxMetric};
use fedbackdoor::bsci::{appendix_a_experiment, AppendixConfig};
use fedbackdoor::nn::{ImageShape, ModelSpec, ParamVector};
use fedbackdoor::report::save_round_jsonl;
use fedbackdoor::sim::{krum_trace, run_experiment, ExperimentConfig, RoundRecord};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut r = rng(2024);
    let mut mismatches = Vec::new();
    for case in 0..100 {
        let n = r.random_range(4..=8);
        let k = r.random_range(2..=6);
        let updates = random_updates(&mut r, n, k);
        let f = r.random_range(1..=n - 3);
        let m = r.random_range(1..=n - f);
        let beta = r.random_range(0.0..0.45);
        let mut check = |name: &str, ok: bool| {
            if !ok {
                mismatches.push(format!("case {case} {name} (n={n}, k={k}, f={f}, m={m}, beta={beta:.3})"));
            }
        };

        let med = median_agg(&updates).unwrap();
        check("median", max_abs_diff(med.global.as_slice(), &oracle_median(&updates)) < 1e-9);
        let tm = trimmed_mean_agg(&updates, beta).unwrap();
        check("trimmed_mean", max_abs_diff(tm.global.as_slice(), &oracle_trimmed_mean(&updates, beta)) < 1e-9);

        let all: Vec<usize> = (0..n).collect();
        let scores = krum_scores(&updates, f).unwrap();
        check("krum scores", max_abs_diff(&scores, &oracle_krum_scores(&updates, &all, f)) < 1e-9);
        let kr = krum_agg(&updates, f).unwrap();
        let (sel, val) = oracle_krum(&updates, f);
        check("krum", kr.selected.as_ref() == Some(&sel) && max_abs_diff(kr.global.as_slice(), &val) < 1e-9);
        let mk = multi_krum_agg(&updates, m, f).unwrap();
        let (sel, val) = oracle_multi_krum(&updates, m, f);
        check("multi_krum", mk.selected.as_ref() == Some(&sel) && max_abs_diff(mk.global.as_slice(), &val) < 1e-9);

        // Bulyan parameters the configuration layer accepts.
        if n > 2 * f {
            let bm = r.random_range(1..=n - f - 2);
            let b = bulyan_agg(&updates, bm, f, beta).unwrap();
            let (sel, val) = oracle_bulyan(&updates, bm, f, beta);
            let ok = b.selected.as_ref() == Some(&sel) && max_abs_diff(b.global.as_slice(), &val) < 1e-9;
            if !ok {
                mismatches.push(format!("case {case} bulyan (n={n}, f={f}, m={bm})"));
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && secs < 10.0,
        format!("{} mismatches over 100 instances in {secs:.2}s {:?}", mismatches.len(), mismatches.first()),
    )
}

fn krum_hand_case() -> Outcome {
    let updates: Vec<ParamVector> = [0.0, 0.1, 0.2, 10.0].iter().map(|&x| ParamVector::new(vec![x])).collect();
    let out = krum_agg(&updates, 1).unwrap();
    let scores = out.scores.clone().unwrap();
    let want = [0.01, 0.01, 0.01, 96.04];
    let close = scores.iter().zip(want).all(|(s, w)| (s - w).abs() < 1e-12);
    outcome(
        close && out.selected == Some(vec![0]) && out.global.as_slice() == [0.0],
        format!("scores {scores:?}, selected {:?}", out.selected),
    )
}

fn weiszfeld_robustness() -> Outcome {
    let mut r = rng(7);
    let k = 5;
    let v = ParamVector::new((0..k).map(|_| r.random_range(-1.0..1.0)).collect());
    let dir = ParamVector::new((0..k).map(|_| r.random_range(-1.0..1.0)).collect());
    let outlier = v.add(&dir.scale(100.0 / dir.norm()));
    let mut updates = vec![v.clone(); 9];
    updates.push(outlier);
    let gm = geometric_median(&updates, 10, 1e-10, 1e-5).unwrap();
    let err = gm.point.dist(&v);
    let monotone = gm.objectives.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    outcome(
        err < 1e-3 && gm.iterations <= 10 && monotone,
        format!("distance {err:.2e} after {} iterations, objective non-increasing: {monotone}", gm.iterations),
    )
}

fn gradient_checks() -> Outcome {
    let started = Instant::now();
    let specs = [
        ("logistic", ModelSpec::logistic(20, 4), 8),
        ("mlp", ModelSpec::mlp(ImageShape::new(1, 6, 6), vec![12, 8], 5), 8),
        ("fmnist_cnn (reduced)", ModelSpec::fmnist_cnn_scaled(ImageShape::new(1, 28, 28), 3, 4, 10, 10), 3),
        ("cifar_alexnet (reduced)", ModelSpec::cifar_alexnet_scaled([3, 4, 4, 4, 3], 10), 2),
    ];
    let mut worst = Vec::new();
    for (i, (name, spec, batch)) in specs.into_iter().enumerate() {
        let model = spec.init(100 + i as u64).unwrap();
        let (xs, ys) = random_batch(&model, batch, 200 + i as u64);
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        worst.push((name, gradient_check(&model, &refs, &ys, 100, 1e-5, 300 + i as u64)));
    }
    let secs = started.elapsed().as_secs_f64();
    let ok = worst.iter().all(|(_, e)| *e < 1e-4) && secs < 60.0;
    let parts: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    outcome(ok, format!("{} in {secs:.1}s", parts.join(", ")))
}

struct DeskRun {
    acc: f64,
    asr: f64,
    records: Vec<RoundRecord>,
}

fn desk(defense: AggregatorConfig, attack: AttackKind) -> DeskRun {
    let mut cfg = ExperimentConfig::desk();
    cfg.defense = defense;
    cfg.attack.kind = attack;
    let result = run_experiment(&cfg).expect("desk run");
    let last = result.records.last().unwrap();
    DeskRun {
        acc: last.benign_acc.unwrap(),
        asr: last.asr.unwrap(),
        records: result.records,
    }
}

fn champ() -> AttackKind {
    AttackKind::Champ {
        metric: ProxMetric::Euclidean,
        window: 3,
        mode: AlphaMode::Bsci,
    }
}

/// Fraction of the last quarter of rounds in which client 0 was selected.
fn tail_selection(records: &[RoundRecord]) -> f64 {
    let trace = krum_trace(records, 0);
    let tail = &trace[trace.len() - trace.len() / 4..];
    tail.iter().filter(|p| p.selected).count() as f64 / tail.len() as f64
}

fn alpha_dynamics() -> Outcome {
    let state = |h: &[f64], k: usize| AdaptiveState {
        window: k,
        history: h.to_vec(),
        mode: AlphaMode::Bsci,
    };
    let ones = compute_alpha(&state(&[1.0; 3], 3)) == 0.0;
    let zeros = compute_alpha(&state(&[0.0; 3], 3)) == 1.0;
    let mut r = rng(9);
    let mut antitone = true;
    for _ in 0..200 {
        let h: Vec<f64> = (0..3).map(|_| r.random::<f64>()).collect();
        let base = compute_alpha(&state(&h, 3));
        for i in 0..3 {
            let mut up = h.clone();
            up[i] = (up[i] + r.random_range(0.0..0.5)).min(1.0);
            antitone &= compute_alpha(&state(&up, 3)) <= base + 1e-15;
        }
    }
    let warm1 = (compute_alpha(&state(&[0.4], 3)) - 0.6).abs() < 1e-15;
    let warm2 = (compute_alpha(&state(&[0.4, 0.8], 3)) - 0.4).abs() < 1e-15;
    let mut live = AdaptiveState::new(3, AlphaMode::Bsci).unwrap();
    let first = live.alpha() == 1.0;
    live.push(0.5);
    let after = (live.alpha() - 0.5).abs() < 1e-15;
    outcome(
        ones && zeros && antitone && warm1 && warm2 && first && after,
        format!("ones->0 {ones}, zeros->1 {zeros}, antitone {antitone}, warm-up {}", warm1 && warm2 && first && after),
    )
}

fn appendix_signal() -> Outcome {
    let started = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let cfg = AppendixConfig {
            seed,
            ..AppendixConfig::default()
        };
        let rep = appendix_a_experiment(&cfg).expect("appendix experiment");
        ok &= rep.backdoored.auc > rep.clean.auc && rep.backdoored.auc >= 0.7;
        parts.push(format!("seed {seed}: clean {:.3} backdoored {:.3}", rep.clean.auc, rep.backdoored.auc));
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(ok && secs < 300.0, format!("{} in {secs:.1}s", parts.join("; ")))
}

fn determinism() -> Outcome {
    let mut cfg = ExperimentConfig::desk();
    cfg.rounds = 6;
    cfg.defense = AggregatorConfig::MultiKrum { m: 3, f: 1 };
    cfg.attack.kind = champ();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let result = run_experiment(&cfg).expect("run");
        let path = dir.path().join(format!("rounds{i}.jsonl"));
        save_round_jsonl(&result.records, &path).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    outcome(
        files[0] == files[1] && !files[0].is_empty(),
        format!("{} bytes, identical: {}", files[0].len(), files[0] == files[1]),
    )
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = vec![
        (1, oracle_equivalence()),
        (2, krum_hand_case()),
        (3, weiszfeld_robustness()),
        (4, gradient_checks()),
    ];

    let started = Instant::now();
    let fedavg = AggregatorConfig::FedAvg;
    let krum = AggregatorConfig::Krum { f: 1 };
    let multi = AggregatorConfig::MultiKrum { m: 3, f: 1 };
    let fa_none = desk(fedavg, AttackKind::None);
    let fa_van = desk(fedavg, AttackKind::Vanilla);
    let kr_none = desk(krum, AttackKind::None);
    let kr_van = desk(krum, AttackKind::Vanilla);
    let kr_champ = desk(krum, champ());
    let mk_none = desk(multi, AttackKind::None);
    let mk_van = desk(multi, AttackKind::Vanilla);
    let mk_champ = desk(multi, champ());
    let desk_secs = started.elapsed().as_secs_f64();

    let gap = fa_none.acc - fa_van.acc;
    results.push((
        5,
        outcome(
            fa_van.asr >= 0.9 && gap.abs() <= 0.05,
            format!(
                "fedavg vanilla ASR {:.4}, acc {:.4} vs no-attack {:.4} (desk grid {desk_secs:.0}s)",
                fa_van.asr, fa_van.acc, fa_none.acc
            ),
        ),
    ));
    results.push((6, outcome(kr_van.asr <= 0.1, format!("krum vanilla ASR {:.4}", kr_van.asr))));
    let within = |run: &DeskRun, base: &DeskRun| (base.acc - run.acc) <= 0.10;
    results.push((
        7,
        outcome(
            kr_champ.asr >= 0.8 && mk_champ.asr >= 0.8 && within(&kr_champ, &kr_none) && within(&mk_champ, &mk_none),
            format!(
                "krum champ ASR {:.4} acc {:.4} (none {:.4}); multi_krum champ ASR {:.4} acc {:.4} (none {:.4})",
                kr_champ.asr, kr_champ.acc, kr_none.acc, mk_champ.asr, mk_champ.acc, mk_none.acc
            ),
        ),
    ));
    let (sel_champ, sel_van) = (tail_selection(&mk_champ.records), tail_selection(&mk_van.records));
    results.push((
        8,
        outcome(
            sel_champ >= 0.5 && sel_van <= 0.1,
            format!("final-quarter selection: champ {sel_champ:.2}, vanilla {sel_van:.2}"),
        ),
    ));
    results.push((9, alpha_dynamics()));
    results.push((10, appendix_signal()));
    results.push((11, determinism()));

    let mut failed = 0;
    for (n, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
}
