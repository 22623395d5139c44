//! All six policies on the same deployment and seeds.
//!
//!     cargo run --release --example policy_comparison

use famus::controller::PolicyKind;
use famus::engine::{aggregate, sweep, Axis, SimConfig};

fn main() -> famus::Result<()> {
    let base = SimConfig {
        horizon: 2000,
        ..SimConfig::default()
    };
    let seeds: Vec<u64> = (1..=4).collect();
    let points = sweep(&base, Axis::V, &[base.balance], &PolicyKind::ALL, &seeds)?;
    println!("policy   cost              accuracy loss     fairness");
    for r in aggregate(&points) {
        println!(
            "{:<7}  {:.4} ± {:.4}   {:.4} ± {:.4}   {:.4} ± {:.4}",
            r.policy, r.cost_mean, r.cost_se, r.accuracy_loss_mean, r.accuracy_loss_se, r.jfi_mean, r.jfi_se
        );
    }
    Ok(())
}
