//! One delegation round by hand: each server solves its client subset,
//! reports its two scores, and the requester hands the tasks to the
//! servers with the lowest score difference. Repeated over a few slots
//! so the idle servers' backlogs push them up the ranking.
//!
//!     cargo run --example drift_plus_penalty

use famus::controller::{
    default_al_max, delegate_famus, server_objective, solve_client_subset, Candidate, ControllerParams,
};
use famus::fairness::{update_queue, ReputationState, VirtualQueue};
use famus::rng::seeded;
use rand::Rng;

fn main() {
    let (servers, tasks) = (5, 2);
    let params = ControllerParams {
        balance: 10.0,
        mu1: 0.5,
        mu2: 0.5,
        server_fee: vec![0.1, 0.1, 0.2, 0.2, 0.3],
        tau: 1.0,
        slot_len: 0.1,
        task_count: tasks,
        force_assign_all: true,
        al_max: default_al_max(1.0, 0.1),
    };
    let epsilon = tasks as f64 / servers as f64;
    let top = 60.0;
    let obj = params.subset_objective(params.balance);

    // server 0 has a rich cluster, server 4 a poor one
    let mut rng = seeded(1);
    let clusters: Vec<Vec<Candidate>> = (0..servers)
        .map(|n| {
            (0..8)
                .map(|client| {
                    let pi: f64 = rng.random_range(0.0..1.0) / (1 + n) as f64;
                    Candidate {
                        client,
                        weight: pi * rng.random_range(50.0..250.0),
                        price: params.balance * params.mu2 * pi / top,
                    }
                })
                .collect()
        })
        .collect();
    let selections: Vec<_> = clusters.iter().map(|c| solve_client_subset(&obj, c)).collect();
    for (n, s) in selections.iter().enumerate() {
        println!("server {n}: picks {:?}, expected mass {:.1} MB, AL {:.3}", s.chosen, s.mass, obj.accuracy_loss(s.mass));
    }

    let mut queues = vec![VirtualQueue::new(epsilon); servers];
    let reps = vec![ReputationState::new(3, 1); servers];
    println!("\nslot  delta                                            delegated  backlog");
    for t in 0..8 {
        let scores: Vec<_> = (0..servers)
            .map(|n| server_objective(&params, n, queues[n].backlog, reps[n].reputation(), epsilon, &selections[n]))
            .collect();
        let action = delegate_famus(&scores, tasks, params.force_assign_all);
        let deltas: Vec<f64> = scores.iter().map(|s| s.delta()).collect();
        let delegated = action.delegated();
        println!(
            "{t:>4}  {deltas:>7.2?}  {:?}  {:.2?}",
            action.delegated_servers(),
            queues.iter().map(|q| q.backlog).collect::<Vec<_>>()
        );
        for n in 0..servers {
            queues[n] = update_queue(queues[n], reps[n].reputation(), delegated[n]);
        }
    }
}
