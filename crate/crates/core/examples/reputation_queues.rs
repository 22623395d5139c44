//! Three servers, one of which is never delegated. Shows how service
//! quality feeds the reputation, how the idle server's virtual queue
//! builds up, and the resulting fairness index.
//!
//!     cargo run --example reputation_queues

use famus::fairness::{
    default_sigma0, lyapunov, service_quality, update_queue, update_reputation, FairnessLedger, ReputationState,
    VirtualQueue,
};

fn main() -> famus::Result<()> {
    let n = 3;
    let sigma0 = default_sigma0(n);
    let mut queues = vec![VirtualQueue::new(2.0 / 3.0); n];
    let mut reps = vec![ReputationState::default(); n];
    let mut ledger = FairnessLedger::new(n);

    println!("slot  delegated            AL                    Q                     g");
    for t in 0..12 {
        // servers 0 and 1 take turns with a task, server 2 never gets one
        let delegated = [t % 2 == 0, t % 2 == 1, false];
        let al: Vec<f64> = delegated.iter().map(|&d| if d { 0.15 } else { 1.1 }).collect();
        let sigma = service_quality(&al)?;
        let g: Vec<f64> = reps.iter().map(ReputationState::reputation).collect();
        println!(
            "{t:>4}  {delegated:?}  {al:.2?}  {:.2?}  {g:.2?}",
            queues.iter().map(|q| q.backlog).collect::<Vec<_>>()
        );
        for k in 0..n {
            queues[k] = update_queue(queues[k], g[k], delegated[k]);
            reps[k] = update_reputation(reps[k], sigma[k], sigma0);
            ledger.record(k, delegated[k], sigma[k]);
        }
    }
    let q: Vec<f64> = queues.iter().map(|q| q.backlog).collect();
    println!("\nLyapunov function: {:.3}", lyapunov(&q));
    println!("delegation / quality ratios: {:.3?}", ledger.ratios()?);
    println!("fairness index: {:.4}", ledger.jfi()?);
    Ok(())
}
