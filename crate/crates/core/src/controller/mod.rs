//! Drift-plus-penalty task delegation and client selection.
//!
//! Each server scores two options for the current slot: holding a task
//! (with its best client subset) or staying idle. The task requester then
//! delegates tasks to the servers where holding one lowers the separable
//! objective the most.

mod policy;
mod subset;

pub use policy::{ClusterView, Offer, Policy, PolicyKind, SelectionDecision, ViewCandidate};
pub use subset::{
    brute_force_subset, solve_client_subset, BranchAndBound, Candidate, Selection, SubsetObjective, SubsetSolver,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Cost/fairness trade-off `V`.
    pub balance: f64,
    /// Weight of accuracy loss in the system cost.
    pub mu1: f64,
    /// Weight of payments in the system cost.
    pub mu2: f64,
    /// Fee `h_n` paid to each server that holds a task.
    pub server_fee: Vec<f64>,
    /// Task period, s.
    pub tau: f64,
    /// Slot length, s.
    pub slot_len: f64,
    pub task_count: usize,
    /// Place every task even when a server would rather stay idle.
    pub force_assign_all: bool,
    /// Accuracy loss charged to a cluster that trains on no data.
    pub al_max: f64,
}

impl ControllerParams {
    pub fn servers(&self) -> usize {
        self.server_fee.len()
    }

    pub fn periods(&self) -> f64 {
        self.tau / self.slot_len
    }

    pub fn al_floor(&self) -> f64 {
        self.slot_len / self.tau
    }

    pub fn accuracy_loss(&self, mass: f64) -> f64 {
        accuracy_loss(mass, self.tau, self.slot_len, self.al_max)
    }

    /// Subset objective scaled for a given `V`.
    pub fn subset_objective(&self, balance: f64) -> SubsetObjective {
        SubsetObjective {
            scale: balance * self.mu1,
            periods: self.periods(),
            floor: self.al_floor(),
            al_max: self.al_max,
        }
    }

    /// Candidates for the optimal menu: weight `pi d`, price
    /// `balance * mu2 * pi / top`.
    pub fn contract_candidates(&self, view: &ClusterView, top: f64, balance: f64) -> Vec<Candidate> {
        view.candidates
            .iter()
            .map(|c| Candidate {
                client: c.client,
                weight: c.top_probability * c.data_size,
                price: balance * self.mu2 * c.top_probability / top,
            })
            .collect()
    }
}

/// Default sentinel: the loss at unit effective mass, `1 + slot_len/tau`.
pub fn default_al_max(tau: f64, slot_len: f64) -> f64 {
    1.0 + slot_len / tau
}

/// `1/sqrt((tau/slot_len) * mass) + slot_len/tau`, or `al_max` when the
/// mass is zero.
pub fn accuracy_loss(mass: f64, tau: f64, slot_len: f64, al_max: f64) -> f64 {
    if mass > 0.0 {
        1.0 / ((tau / slot_len) * mass).sqrt() + slot_len / tau
    } else {
        al_max
    }
}

/// Expected cost of one cluster:
/// `mu2 (h [delegated] + sum pi / top) + mu1 AL(sum pi d)`, where the
/// selection is `(pi, d)` pairs of the clients offered the top item.
pub fn expected_cluster_cost(
    params: &ControllerParams,
    server: usize,
    delegated: bool,
    selection: &[(f64, f64)],
    top: f64,
) -> f64 {
    let fee = if delegated { params.server_fee[server] } else { 0.0 };
    let payment: f64 = selection.iter().map(|(pi, _)| pi / top).sum();
    let mass: f64 = selection.iter().map(|(pi, d)| pi * d).sum();
    params.mu2 * (fee + payment) + params.mu1 * params.accuracy_loss(mass)
}

/// The two values a server reports to the task requester.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerScore {
    pub if_delegated: f64,
    pub if_idle: f64,
    /// Backlog, used to break ties.
    pub queue: f64,
}

impl ServerScore {
    pub fn delta(&self) -> f64 {
        self.if_delegated - self.if_idle
    }
}

/// `if_delegated = mu2 V h - Q + V mu1 AL(sel) + V mu2 sum pi/top` and
/// `if_idle = Q eps g + V mu1 AL(0)`.
pub fn server_objective(
    params: &ControllerParams,
    server: usize,
    queue: f64,
    reputation: f64,
    epsilon: f64,
    selection: &Selection,
) -> ServerScore {
    let v = params.balance;
    ServerScore {
        if_delegated: params.mu2 * v * params.server_fee[server] - queue + selection.objective,
        if_idle: queue * epsilon * reputation + v * params.mu1 * params.al_max,
        queue,
    }
}

/// Task-to-server assignment. Each task goes to at most one server and each
/// server holds at most one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelegationAction {
    servers: usize,
    /// `assignment[k]` is the server holding task `k`.
    assignment: Vec<Option<usize>>,
}

impl DelegationAction {
    pub fn new(servers: usize, assignment: Vec<Option<usize>>) -> Result<Self> {
        let mut used = vec![false; servers];
        for (k, a) in assignment.iter().enumerate() {
            if let Some(n) = *a {
                if n >= servers {
                    return Err(Error::InvalidDelegation(format!("task {k} assigned to unknown server {n}")));
                }
                if std::mem::replace(&mut used[n], true) {
                    return Err(Error::InvalidDelegation(format!("server {n} holds more than one task")));
                }
            }
        }
        Ok(Self { servers, assignment })
    }

    /// Task `k` goes to `chosen[k]`; remaining tasks stay unassigned.
    pub fn from_servers(tasks: usize, servers: usize, chosen: &[usize]) -> Result<Self> {
        if chosen.len() > tasks {
            return Err(Error::InvalidDelegation(format!(
                "{} servers chosen for {tasks} tasks",
                chosen.len()
            )));
        }
        let assignment = (0..tasks).map(|k| chosen.get(k).copied()).collect();
        Self::new(servers, assignment)
    }

    pub fn idle(tasks: usize, servers: usize) -> Self {
        Self {
            servers,
            assignment: vec![None; tasks],
        }
    }

    pub fn tasks(&self) -> usize {
        self.assignment.len()
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    /// Per-server flag: holds a task.
    pub fn delegated(&self) -> Vec<bool> {
        let mut d = vec![false; self.servers];
        for n in self.assignment.iter().flatten() {
            d[*n] = true;
        }
        d
    }

    pub fn delegated_servers(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.assignment.iter().flatten().copied().collect();
        s.sort_unstable();
        s
    }

    /// Dense `tasks x servers` 0/1 matrix.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        self.assignment
            .iter()
            .map(|a| (0..self.servers).map(|n| u8::from(*a == Some(n))).collect())
            .collect()
    }
}

/// Total separable objective of delegating exactly the servers in `chosen`.
pub fn delegation_objective(scores: &[ServerScore], chosen: &[usize]) -> f64 {
    let mut on = vec![false; scores.len()];
    for &n in chosen {
        on[n] = true;
    }
    scores
        .iter()
        .zip(on)
        .map(|(s, d)| if d { s.if_delegated } else { s.if_idle })
        .sum()
}

/// Servers ordered by `delta` ascending, then larger backlog, then
/// smaller index.
pub fn rank_servers(scores: &[ServerScore]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .delta()
            .total_cmp(&scores[b].delta())
            .then(scores[b].queue.total_cmp(&scores[a].queue))
            .then(a.cmp(&b))
    });
    order
}

/// The `tasks` best-ranked servers, or only those among them with a
/// negative `delta` when assignment is optional.
pub fn delegate_famus(scores: &[ServerScore], tasks: usize, force_assign_all: bool) -> DelegationAction {
    let chosen: Vec<usize> = rank_servers(scores)
        .into_iter()
        .take(tasks)
        .filter(|&n| force_assign_all || scores[n].delta() < 0.0)
        .collect();
    DelegationAction::from_servers(tasks, scores.len(), &chosen).expect("ranked servers are distinct")
}

/// Exhaustive search over server subsets of size `tasks` (or `<= tasks`
/// when assignment is optional). Returns the chosen servers and objective.
pub fn delegate_exhaustive(scores: &[ServerScore], tasks: usize, force_assign_all: bool) -> (Vec<usize>, f64) {
    let n = scores.len();
    assert!(n <= 20, "exhaustive delegation limited to 20 servers");
    let want = tasks.min(n);
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > want || (force_assign_all && size != want) {
            continue;
        }
        let chosen: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let v = delegation_objective(scores, &chosen);
        if v < best.1 {
            best = (chosen, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn params() -> ControllerParams {
        ControllerParams {
            balance: 10.0,
            mu1: 0.1,
            mu2: 0.9,
            server_fee: vec![1.0; 3],
            tau: 1.0,
            slot_len: 0.1,
            task_count: 2,
            force_assign_all: true,
            al_max: default_al_max(1.0, 0.1),
        }
    }

    fn score(delta: f64, queue: f64) -> ServerScore {
        ServerScore {
            if_delegated: delta,
            if_idle: 0.0,
            queue,
        }
    }

    #[test]
    fn accuracy_loss_examples() {
        assert!((accuracy_loss(0.1, 1.0, 0.1, 1.1) - 1.1).abs() < 1e-15);
        assert_eq!(accuracy_loss(0.0, 1.0, 0.1, 1.1), 1.1);
        assert!((accuracy_loss(1e18, 1.0, 0.1, 1.1) - 0.1).abs() < 1e-8);
        let a = accuracy_loss(37.0, 1.0, 0.1, 1.1) - 0.1;
        let b = accuracy_loss(74.0, 1.0, 0.1, 1.1) - 0.1;
        assert!((b / a - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cluster_cost_examples() {
        let p = params();
        assert!((expected_cluster_cost(&p, 0, false, &[], 2.0) - 0.1 * 1.1).abs() < 1e-15);
        let c = expected_cluster_cost(&p, 0, true, &[(1.0, 100.0)], 2.0);
        let hand = 0.9 * (1.0 + 0.5) + 0.1 * (1.0 / 1000f64.sqrt() + 0.1);
        assert!((c - hand).abs() < 1e-12);
        let doubled = ControllerParams { mu2: 1.8, ..p.clone() };
        let pay = |q: &ControllerParams| {
            expected_cluster_cost(q, 0, true, &[(1.0, 100.0)], 2.0) - q.mu1 * q.accuracy_loss(100.0)
        };
        assert!((pay(&doubled) - 2.0 * pay(&p)).abs() < 1e-12);
    }

    #[test]
    fn server_objective_by_hand() {
        let p = ControllerParams {
            server_fee: vec![1.0, 2.0],
            ..params()
        };
        let obj = p.subset_objective(p.balance);
        let cands = [Candidate {
            client: 0,
            weight: 100.0,
            price: 10.0 * 0.9 * 1.0 / 4.0,
        }];
        let sel = Selection {
            chosen: vec![0],
            mass: 100.0,
            price: cands[0].price,
            objective: obj.evaluate(&cands, &[0]),
        };
        let s0 = server_objective(&p, 0, 3.0, 0.5, 0.8, &sel);
        let s1 = server_objective(&p, 1, 0.0, 0.5, 0.8, &Selection::empty(&obj));
        let al = 1.0 / 1000f64.sqrt() + 0.1;
        assert!((s0.if_delegated - (9.0 - 3.0 + 1.0 * al + 2.25)).abs() < 1e-12);
        assert!((s0.if_idle - (3.0 * 0.8 * 0.5 + 1.1)).abs() < 1e-12);
        assert!((s1.if_delegated - (18.0 + 1.1)).abs() < 1e-12);
        assert!((s1.if_idle - 1.1).abs() < 1e-12);
    }

    #[test]
    fn queue_pressure_forces_delegation() {
        let p = params();
        let sel = Selection::empty(&p.subset_objective(p.balance));
        let s = server_objective(&p, 0, 1e6, 0.5, 0.8, &sel);
        assert!(s.if_delegated < s.if_idle);
    }

    #[test]
    fn zero_balance_only_sees_queues() {
        let p = ControllerParams {
            balance: 0.0,
            ..params()
        };
        let sel = Selection::empty(&p.subset_objective(0.0));
        let s = server_objective(&p, 0, 2.0, 0.5, 0.8, &sel);
        assert_eq!(s.if_delegated, -2.0);
        assert_eq!(s.if_idle, 0.8);
    }

    #[test]
    fn delegates_smallest_deltas() {
        let scores = [score(-1.0, 0.0), score(5.0, 0.0), score(-2.0, 0.0)];
        let a = delegate_famus(&scores, 2, true);
        assert_eq!(a.assignment(), &[Some(2), Some(0)]);
        assert_eq!(a.delegated(), vec![true, false, true]);
        assert_eq!(a.matrix(), vec![vec![0, 0, 1], vec![1, 0, 0]]);
    }

    #[test]
    fn all_servers_when_tasks_equal_servers() {
        let scores = [score(3.0, 0.0), score(5.0, 0.0), score(7.0, 0.0)];
        assert_eq!(delegate_famus(&scores, 3, true).delegated(), vec![true; 3]);
        // optional assignment keeps only improving servers
        assert_eq!(delegate_famus(&scores, 3, false).delegated(), vec![false; 3]);
    }

    #[test]
    fn ties_prefer_backlog_then_index() {
        let scores = [score(1.0, 0.0), score(1.0, 2.0), score(1.0, 2.0)];
        assert_eq!(delegate_famus(&scores, 1, true).assignment(), &[Some(1)]);
        assert_eq!(delegate_famus(&scores, 2, true).delegated_servers(), vec![1, 2]);
    }

    #[test]
    fn action_constructor_checks_columns() {
        assert!(DelegationAction::new(3, vec![Some(1), Some(1)]).is_err());
        assert!(DelegationAction::new(3, vec![Some(3)]).is_err());
        assert!(DelegationAction::from_servers(1, 3, &[0, 1]).is_err());
        let a = DelegationAction::new(3, vec![None, Some(2)]).unwrap();
        for row in a.matrix() {
            assert!(row.iter().map(|&v| u32::from(v)).sum::<u32>() <= 1);
        }
    }

    #[test]
    fn matches_exhaustive_delegation() {
        let mut rng = seeded(9);
        for _ in 0..2000 {
            let n = rng.random_range(1..=10);
            let k = rng.random_range(0..=n);
            let force = rng.random_bool(0.5);
            let scores: Vec<ServerScore> = (0..n)
                .map(|_| ServerScore {
                    if_delegated: rng.random_range(-10.0..10.0),
                    if_idle: rng.random_range(-10.0..10.0),
                    queue: rng.random_range(0.0..5.0),
                })
                .collect();
            let fast = delegate_famus(&scores, k, force);
            let (_, best) = delegate_exhaustive(&scores, k, force);
            let got = delegation_objective(&scores, &fast.delegated_servers());
            assert!((got - best).abs() <= 1e-12 * best.abs().max(1.0), "{got} vs {best}");
        }
    }
}
