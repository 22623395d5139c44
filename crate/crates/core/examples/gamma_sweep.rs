//! Sweeps the number of type levels and prints the aggregated CSV that
//! `famus sweep --axis gamma` would write.
//!
//!     cargo run --release --example gamma_sweep

use famus::cli::emit::sweep_csv;
use famus::controller::PolicyKind;
use famus::engine::{aggregate, sweep, Axis, SimConfig};

fn main() -> famus::Result<()> {
    let base = SimConfig {
        horizon: 1500,
        ..SimConfig::default()
    };
    let seeds: Vec<u64> = (1..=4).collect();
    let points = sweep(&base, Axis::Gamma, &[10.0, 20.0, 50.0, 100.0], &[PolicyKind::Famus], &seeds)?;
    let csv = sweep_csv(Axis::Gamma, &aggregate(&points))?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
