//! Where the malicious client ranks under Multi-Krum each round, for the
//! vanilla attack and for the adaptive one.
//!
//! ```text
//! cargo run --release --example stealth_trace
//! ```

use fedbackdoor::aggregation::AggregatorConfig;
use fedbackdoor::attack::AttackKind;
use fedbackdoor::sim::{krum_trace, run_experiment, ExperimentConfig};

fn main() -> fedbackdoor::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.defense = AggregatorConfig::MultiKrum { m: 3, f: 1 };
    let champ = cfg.attack.kind;
    cfg.attack.kind = AttackKind::Vanilla;
    let vanilla = run_experiment(&cfg)?;
    cfg.attack.kind = champ;
    let adaptive = run_experiment(&cfg)?;

    let (tv, ta) = (krum_trace(&vanilla.records, 0), krum_trace(&adaptive.records, 0));
    println!("round | vanilla rank  score      | champ rank  score      alpha  v_t    asr");
    for ((v, a), r) in tv.iter().zip(&ta).zip(&adaptive.records) {
        let mark = |sel: bool| if sel { '*' } else { ' ' };
        println!(
            "{:>5} | {:>4}{}  {:>12.3e} | {:>4}{}  {:>12.3e}  {:.2}   {}  {:.3}",
            v.t,
            v.rank,
            mark(v.selected),
            v.score,
            a.rank,
            mark(a.selected),
            a.score,
            r.alpha.unwrap_or(f64::NAN),
            r.v.map_or("  - ".into(), |v| format!("{v:.2}")),
            r.asr.unwrap_or(f64::NAN)
        );
    }
    println!("(* = selected; rank 1 is the best Krum score)");
    Ok(())
}
