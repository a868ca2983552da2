//! Result export: per-round JSON lines and summary CSV tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{ExperimentConfig, RoundRecord};

/// One line of `rounds.jsonl`. Field order here is the order on disk.
#[derive(Serialize)]
struct RoundLine<'a> {
    t: usize,
    benign_acc: Option<f64>,
    asr: Option<f64>,
    v: Option<f64>,
    alpha: Option<f64>,
    selected: &'a Option<Vec<usize>>,
    scores: &'a Option<Vec<f64>>,
}

/// Serializes records as one JSON object per line. Floats are written with
/// full round-trip precision; non-finite scores become `null`.
pub fn write_round_jsonl<W: Write>(records: &[RoundRecord], mut w: W) -> Result<()> {
    for r in records {
        let line = RoundLine {
            t: r.t,
            benign_acc: r.benign_acc,
            asr: r.asr,
            v: r.v,
            alpha: r.alpha,
            selected: &r.selected,
            scores: &r.scores,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_round_jsonl(records: &[RoundRecord], path: &Path) -> Result<()> {
    write_round_jsonl(records, BufWriter::new(File::create(path)?))
}

pub fn read_round_jsonl<R: BufRead>(r: R) -> Result<Vec<RoundRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RoundRecord =
            serde_json::from_str(&line).map_err(|e| Error::input(format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_round_jsonl(path: &Path) -> Result<Vec<RoundRecord>> {
    let file = File::open(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    read_round_jsonl(BufReader::new(file))
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub digest: String,
    pub defense: String,
    pub attack: String,
    pub prox: String,
    pub trigger: String,
    /// ASR at round `floor(T/2)` (the latest evaluated round at or before it).
    pub asr_mid: Option<f64>,
    pub asr_final: Option<f64>,
    pub benign_acc_final: Option<f64>,
    pub rounds: usize,
}

/// Index of the mid-run round for a run of `rounds` rounds.
pub fn mid_round(rounds: usize) -> usize {
    rounds / 2
}

fn metric_at(records: &[RoundRecord], t: usize, pick: fn(&RoundRecord) -> Option<f64>) -> Option<f64> {
    records.iter().filter(|r| r.t <= t).rev().find_map(pick)
}

impl RunSummary {
    pub fn from_records(cfg: &ExperimentConfig, records: &[RoundRecord]) -> Result<Self> {
        let mut s = Self::from_series(records);
        s.digest = cfg.digest()?;
        s.defense = cfg.defense.to_string();
        s.attack = cfg.attack.kind.name().to_string();
        s.prox = match cfg.attack.kind {
            crate::attack::AttackKind::Champ { metric, .. } => metric.to_string(),
            _ => "-".into(),
        };
        let b = cfg.attack.backdoor;
        s.trigger = format!("{0}x{0}@{1},{2}:{3}->{4}", b.size, b.origin.0, b.origin.1, b.source_class, b.target_class);
        Ok(s)
    }

    /// Summary from the round series alone; descriptive columns are left as `-`.
    pub fn from_series(records: &[RoundRecord]) -> Self {
        let last = records.iter().map(|r| r.t).max().unwrap_or(0);
        Self {
            digest: "-".into(),
            defense: "-".into(),
            attack: "-".into(),
            prox: "-".into(),
            trigger: "-".into(),
            asr_mid: metric_at(records, mid_round(last), |r| r.asr),
            asr_final: metric_at(records, last, |r| r.asr),
            benign_acc_final: metric_at(records, last, |r| r.benign_acc),
            rounds: last,
        }
    }
}

fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const SUMMARY_HEADER: &str = "defense,attack,prox,trigger,asr_mid,asr_final,benign_acc_final";

pub fn write_summary_csv<W: Write>(summaries: &[RunSummary], mut w: W) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            field(&s.defense),
            field(&s.attack),
            field(&s.prox),
            field(&s.trigger),
            num(s.asr_mid),
            num(s.asr_final),
            num(s.benign_acc_final)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_summary_csv(summaries: &[RunSummary], path: &Path) -> Result<()> {
    write_summary_csv(summaries, BufWriter::new(File::create(path)?))
}

/// Per-round table of a JSONL series followed by a `summary` row.
pub fn report_csv<W: Write>(records: &[RoundRecord], mut w: W) -> Result<()> {
    writeln!(w, "t,benign_acc,asr,v,alpha")?;
    for r in records {
        writeln!(w, "{},{},{},{},{}", r.t, num(r.benign_acc), num(r.asr), num(r.v), num(r.alpha))?;
    }
    let s = RunSummary::from_series(records);
    let mean = |pick: fn(&RoundRecord) -> Option<f64>| {
        let xs: Vec<f64> = records.iter().filter_map(pick).collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    };
    writeln!(
        w,
        "summary,{},{},{},{}",
        num(s.benign_acc_final),
        num(s.asr_final),
        num(mean(|r| r.v)),
        num(mean(|r| r.alpha))
    )?;
    w.flush()?;
    Ok(())
}
