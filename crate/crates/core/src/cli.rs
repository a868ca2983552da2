//! Command-line front end. [`cli_main`] returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::aggregation::{aggregate, AggregatorConfig};
use crate::attack::{AlphaMode, AttackKind, ProxMetric};
use crate::bsci::{appendix_a_experiment, AppendixConfig, BsciConfig};
use crate::data::{BlobParams, ImageShape};
use crate::error::{Error, Result};
use crate::nn::{save_checkpoint, ParamVector};
use crate::report::{load_round_jsonl, report_csv, save_round_jsonl, save_summary_csv, RunSummary};
use crate::sim::{run_experiment, DatasetSource, ExperimentConfig, ModelKind};

/// Default output root when neither `--out` nor the environment says otherwise.
pub const OUT_ENV: &str = "FEDBACKDOOR_OUT";

#[derive(Parser, Debug)]
#[command(name = "fedbackdoor", version, about = "Federated learning backdoor simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one federated experiment and write rounds.jsonl, summary.csv,
    /// config.json and final.ckpt.
    Run(RunArgs),
    /// Aggregate a file of update vectors with one rule and print the outcome as JSON.
    AggTest(AggArgs),
    /// Shadow-model membership inference on clean versus backdoored targets.
    MiaAppendix(MiaArgs),
    /// Turn a rounds.jsonl file into a CSV table with a trailing summary row.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Base configuration as JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in profile used when no --config is given: desk, fmnist, cifar-like.
    #[arg(long, default_value = "desk")]
    preset: String,
    /// `idx:<images>,<labels>[,<test images>,<test labels>]` or `synthetic:<classes>x<per_class>`.
    #[arg(long)]
    dataset: Option<String>,
    /// `logistic`, `mlp:<h1>[x<h2>...]`, `fmnist_cnn` or `cifar_alexnet`.
    #[arg(long)]
    model: Option<String>,
    /// Aggregation rule, `name[:k=v,...]`.
    #[arg(long)]
    defense: Option<String>,
    /// `none`, `vanilla` or `champ`.
    #[arg(long)]
    attack: Option<String>,
    /// `l2`, `cos` or `huber[:delta]`.
    #[arg(long)]
    prox: Option<String>,
    /// `bsci` or `asr`.
    #[arg(long)]
    alpha_mode: Option<String>,
    #[arg(long)]
    window: Option<usize>,
    /// `R=<int>,p=<a;b;...>,epochs=<int>,degree=<int>,C=<real>,tol=<real>`.
    #[arg(long)]
    bsci: Option<String>,
    /// Comma-separated malicious client ids.
    #[arg(long)]
    malicious: Option<String>,
    #[arg(long)]
    clients: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "runs/latest")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AggArgs {
    /// Aggregation rule, `name[:k=v,...]`.
    #[arg(long, default_value = "fedavg")]
    rule: String,
    /// JSON array of vectors, or one vector per line (comma or space separated).
    input: PathBuf,
    /// Previous global model in the same format (one vector), needed by rlr and align_ins.
    #[arg(long)]
    prev: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MiaArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full report (ROC curves included) as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// A rounds.jsonl file.
    input: PathBuf,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs the chosen subcommand.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::AggTest(a) => cmd_agg(a),
        Command::MiaAppendix(a) => cmd_mia(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn parse_dataset(s: &str) -> Result<DatasetSource> {
    if let Some(rest) = s.strip_prefix("idx:") {
        let parts: Vec<&str> = rest.split(',').collect();
        let (test_images, test_labels, test_fraction) = match parts.len() {
            2 => (None, None, 0.1),
            4 => (Some(PathBuf::from(parts[2])), Some(PathBuf::from(parts[3])), 0.0),
            _ => return Err(Error::config("idx dataset wants 2 or 4 comma-separated paths")),
        };
        for p in &parts {
            if !Path::new(p).exists() {
                return Err(Error::input(format!("dataset file not found: {p}")));
            }
        }
        return Ok(DatasetSource::Idx {
            images: parts[0].into(),
            labels: parts[1].into(),
            test_images,
            test_labels,
            limit: None,
            test_fraction,
        });
    }
    if let Some(rest) = s.strip_prefix("synthetic:") {
        let (c, n) = rest
            .split_once('x')
            .ok_or_else(|| Error::config("synthetic dataset wants <classes>x<per_class>"))?;
        let classes: usize = c.parse().map_err(|_| Error::config(format!("bad class count {c:?}")))?;
        let per_class: usize = n.parse().map_err(|_| Error::config(format!("bad per-class count {n:?}")))?;
        return Ok(DatasetSource::Synthetic {
            classes,
            per_class,
            test_per_class: (per_class / 5).max(1),
            shape: ImageShape::new(1, 8, 8),
            blobs: BlobParams::default(),
        });
    }
    Err(Error::config(format!("unknown dataset {s:?}")))
}

fn parse_model(s: &str) -> Result<ModelKind> {
    match s {
        "logistic" => Ok(ModelKind::Logistic),
        "fmnist_cnn" => Ok(ModelKind::FmnistCnn),
        "cifar_alexnet" => Ok(ModelKind::CifarAlexnet),
        _ => {
            let widths = s
                .strip_prefix("mlp:")
                .ok_or_else(|| Error::config(format!("unknown model {s:?}")))?;
            let hidden = widths
                .split('x')
                .map(|w| w.parse().map_err(|_| Error::config(format!("bad hidden width {w:?}"))))
                .collect::<Result<Vec<usize>>>()?;
            Ok(ModelKind::Mlp { hidden })
        }
    }
}

/// Applies a `--bsci` override string onto `cfg`.
pub fn apply_bsci_overrides(cfg: &mut BsciConfig, s: &str) -> Result<()> {
    let mut r = None;
    for kv in s.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected key=value in --bsci, got {kv:?}")))?;
        let bad = || Error::config(format!("bad value for bsci {k}: {v:?}"));
        match k {
            "R" | "r" => r = Some(v.parse::<usize>().map_err(|_| bad())?),
            "p" => {
                cfg.p_levels = v
                    .split(';')
                    .map(|x| x.parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<_>>()?
            }
            "epochs" => cfg.ref_epochs = v.parse().map_err(|_| bad())?,
            "degree" => cfg.svm.degree = v.parse().map_err(|_| bad())?,
            "C" | "c" => cfg.svm.c = v.parse().map_err(|_| bad())?,
            "tol" => cfg.svm.tol = v.parse().map_err(|_| bad())?,
            _ => return Err(Error::config(format!("unknown bsci key {k:?}"))),
        }
    }
    if let Some(r) = r {
        if r != cfg.p_levels.len() {
            // Without explicit levels, stretch the default pattern: half poisoned.
            if s.contains("p=") {
                return Err(Error::config("R disagrees with the number of p levels"));
            }
            let poisoned = r / 2;
            cfg.p_levels = (0..r)
                .map(|i| if i < poisoned { 0.3 * (poisoned - i) as f64 / poisoned as f64 } else { 0.0 })
                .collect();
        }
    }
    cfg.validate()
}

fn build_run_config(a: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?
        }
        None => match a.preset.as_str() {
            "desk" => ExperimentConfig::desk(),
            "cifar-like" => ExperimentConfig::cifar_like(),
            "fmnist" => {
                let ds = a
                    .dataset
                    .as_deref()
                    .ok_or_else(|| Error::config("the fmnist preset needs --dataset idx:..."))?;
                let base = ExperimentConfig::fmnist(PathBuf::new(), PathBuf::new(), PathBuf::new(), PathBuf::new());
                ExperimentConfig {
                    dataset: parse_dataset(ds)?,
                    ..base
                }
            }
            other => return Err(Error::config(format!("unknown preset {other:?}"))),
        },
    };
    if let Some(ds) = &a.dataset {
        cfg.dataset = parse_dataset(ds)?;
    }
    if let Some(m) = &a.model {
        cfg.model = parse_model(m)?;
    }
    if let Some(d) = &a.defense {
        cfg.defense = d.parse()?;
    }
    let (mut metric, mut window, mut mode) = match cfg.attack.kind {
        AttackKind::Champ { metric, window, mode } => (metric, window, mode),
        _ => (ProxMetric::Euclidean, 3, AlphaMode::Bsci),
    };
    if let Some(p) = &a.prox {
        metric = p.parse()?;
    }
    if let Some(w) = a.window {
        window = w;
    }
    if let Some(m) = &a.alpha_mode {
        mode = match m.as_str() {
            "bsci" => AlphaMode::Bsci,
            "asr" => AlphaMode::Asr,
            _ => return Err(Error::config(format!("unknown alpha mode {m:?}"))),
        };
    }
    let attack = a.attack.as_deref().unwrap_or(cfg.attack.kind.name());
    cfg.attack.kind = match attack {
        "none" => AttackKind::None,
        "vanilla" => AttackKind::Vanilla,
        "champ" => AttackKind::Champ { metric, window, mode },
        other => return Err(Error::config(format!("unknown attack {other:?}"))),
    };
    if let Some(b) = &a.bsci {
        apply_bsci_overrides(&mut cfg.bsci, b)?;
    }
    if let Some(m) = &a.malicious {
        cfg.attack.malicious_ids = m
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.trim().parse().map_err(|_| Error::config(format!("bad client id {s:?}"))))
            .collect::<Result<_>>()?;
    }
    if let Some(v) = a.clients {
        cfg.clients = v;
    }
    if let Some(v) = a.rounds {
        cfg.rounds = v;
    }
    if let Some(v) = a.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.train.lr = v;
    }
    if let Some(v) = a.batch {
        cfg.train.batch = v;
    }
    if let Some(v) = a.eval_every {
        cfg.eval_every = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = build_run_config(&a)?;
    let result = run_experiment(&cfg)?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("config.json"), serde_json::to_string_pretty(&cfg)? + "\n")?;
    save_round_jsonl(&result.records, &a.out.join("rounds.jsonl"))?;
    let summary = RunSummary::from_records(&cfg, &result.records)?;
    save_summary_csv(std::slice::from_ref(&summary), &a.out.join("summary.csv"))?;
    save_checkpoint(&result.final_model, &a.out.join("final.ckpt"))?;
    println!(
        "{} rounds, benign_acc {}, asr {} -> {}",
        summary.rounds,
        summary.benign_acc_final.map_or("-".into(), |x| format!("{x:.4}")),
        summary.asr_final.map_or("-".into(), |x| format!("{x:.4}")),
        a.out.display()
    );
    Ok(())
}

/// Reads vectors from JSON (`[[..],..]`) or from plain text, one per line.
pub fn parse_vectors(text: &str) -> Result<Vec<ParamVector>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let rows: Vec<Vec<f64>> = serde_json::from_str(trimmed)?;
        return Ok(rows.into_iter().map(ParamVector::new).collect());
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| Error::input(format!("vector {}: bad number {s:?}", i + 1))))
                .collect::<Result<Vec<_>>>()
                .map(ParamVector::new)
        })
        .collect()
}

fn read_vectors(path: &Path) -> Result<Vec<ParamVector>> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    parse_vectors(&text)
}

fn cmd_agg(a: AggArgs) -> Result<()> {
    let rule: AggregatorConfig = a.rule.parse()?;
    let updates = read_vectors(&a.input)?;
    rule.validate(updates.len())?;
    let prev = match &a.prev {
        Some(p) => Some(
            read_vectors(p)?
                .into_iter()
                .next()
                .ok_or_else(|| Error::input("previous-model file is empty"))?,
        ),
        None => None,
    };
    let outcome = aggregate(&rule, &updates, prev.as_ref(), &[])?;
    let json = serde_json::json!({
        "rule": rule.to_string(),
        "global": outcome.global,
        "selected": outcome.selected,
        "scores": outcome.scores,
        "iterations": outcome.iterations,
    });
    println!("{json}");
    Ok(())
}

fn cmd_mia(a: MiaArgs) -> Result<()> {
    let cfg = AppendixConfig {
        seed: a.seed,
        ..AppendixConfig::default()
    };
    let report = appendix_a_experiment(&cfg)?;
    if let Some(path) = &a.out {
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    for c in [&report.clean, &report.backdoored] {
        let m = &c.confusion;
        println!(
            "{:<10} auc {:.6}  tp {} fp {} tn {} fn {}",
            if c.backdoored { "backdoored" } else { "clean" },
            c.auc,
            m.true_member,
            m.false_member,
            m.true_nonmember,
            m.false_nonmember
        );
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let records = load_round_jsonl(&a.input)?;
    match &a.out {
        Some(path) => report_csv(&records, BufWriter::new(fs::File::create(path)?)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report_csv(&records, &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}
