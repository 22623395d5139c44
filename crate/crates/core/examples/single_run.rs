//! A short FAMuS run with the default deployment, written out as the
//! per-slot stream CSV and the JSON summary.
//!
//!     cargo run --release --example single_run [OUT_DIR]

use famus::cli::emit::emit_run;
use famus::engine::{run, SimConfig};

fn main() -> famus::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "famus-out".into());
    let cfg = SimConfig {
        horizon: 1000,
        seed: 42,
        ..SimConfig::default()
    };
    let out = run(cfg)?;
    let s = &out.summary;
    println!("grid after warm-up: {:.3?}", s.grid);
    println!("time-average cost {:.4}, accuracy loss {:.4}", s.time_avg_cost, s.time_avg_accuracy_loss);
    println!("participants per slot {:.2}, fairness {:?}", s.time_avg_participants, s.jfi);
    println!("delegations per server {:?}", s.delegation_counts);
    for p in emit_run(&out, dir.as_ref(), true)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
