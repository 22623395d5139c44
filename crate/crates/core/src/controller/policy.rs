//! The controller policy and the five comparison baselines.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    delegate_famus, expected_cluster_cost, server_objective, solve_client_subset, ControllerParams,
    DelegationAction, ServerScore,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Drift-plus-penalty delegation with optimised contract selection.
    Famus,
    /// Random servers, random participants paid their cost.
    Random,
    /// Per-slot expected-cost minimisation, ignoring fairness.
    Greedy,
    /// Menu offered to every covered client; delegation by lowest expected cost.
    Ncf,
    /// Uniform random servers each release; menu offered to every covered client.
    Ea,
    /// One random server set for the whole run; menu offered to every covered client.
    Fixed,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Famus,
        PolicyKind::Random,
        PolicyKind::Greedy,
        PolicyKind::Ncf,
        PolicyKind::Ea,
        PolicyKind::Fixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Famus => "famus",
            PolicyKind::Random => "random",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Ncf => "ncf",
            PolicyKind::Ea => "ea",
            PolicyKind::Fixed => "fixed",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

/// What a server knows about one client in its cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewCandidate {
    pub client: usize,
    /// Training data, MB.
    pub data_size: f64,
    /// Believed probability the client is of the top type.
    pub top_probability: f64,
    /// Participation cost computed at the nominal bandwidth share.
    pub nominal_cost: f64,
}

/// Snapshot of one server's state at decision time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterView {
    pub server: usize,
    pub queue: f64,
    pub reputation: f64,
    pub candidates: Vec<ViewCandidate>,
}

/// How selected clients are engaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Offer {
    /// Offered the contract menu; they best-respond with their own type.
    Contract,
    /// Told to participate and reimbursed their actual cost.
    PayCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDecision {
    pub server: usize,
    /// Selected client ids, ascending.
    pub clients: Vec<usize>,
    pub offer: Offer,
    /// Expected cost of the cluster if it holds a task with this selection.
    pub expected_cost: f64,
}

/// A policy plus whatever it remembers across releases.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    fixed: Option<Vec<usize>>,
}

impl Policy {
    pub fn new(kind: PolicyKind) -> Self {
        Self { kind, fixed: None }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// Decides which servers take the tasks released this slot. `top` is
    /// the top type level value of the current grid.
    pub fn delegate<R: Rng + ?Sized>(
        &mut self,
        views: &[ClusterView],
        params: &ControllerParams,
        epsilon: f64,
        top: f64,
        rng: &mut R,
    ) -> DelegationAction {
        let servers = views.len();
        let tasks = params.task_count;
        let chosen = match self.kind {
            PolicyKind::Famus => {
                let scores: Vec<ServerScore> = views
                    .iter()
                    .map(|v| {
                        let cands = params.contract_candidates(v, top, params.balance);
                        let sel = solve_client_subset(&params.subset_objective(params.balance), &cands);
                        server_objective(params, v.server, v.queue, v.reputation, epsilon, &sel)
                    })
                    .collect();
                return delegate_famus(&scores, tasks, params.force_assign_all);
            }
            PolicyKind::Greedy | PolicyKind::Ncf => {
                let scores: Vec<ServerScore> = views
                    .iter()
                    .map(|v| {
                        let sel = self.select(v, params, top, rng);
                        ServerScore {
                            if_delegated: sel.expected_cost,
                            if_idle: params.mu1 * params.al_max,
                            queue: 0.0,
                        }
                    })
                    .collect();
                return delegate_famus(&scores, tasks, params.force_assign_all);
            }
            PolicyKind::Random | PolicyKind::Ea => uniform_subset(rng, servers, tasks),
            PolicyKind::Fixed => self
                .fixed
                .get_or_insert_with(|| uniform_subset(rng, servers, tasks))
                .clone(),
        };
        DelegationAction::from_servers(tasks, servers, &chosen).expect("distinct servers")
    }

    /// Client selection for a server that holds a task.
    pub fn select<R: Rng + ?Sized>(
        &self,
        view: &ClusterView,
        params: &ControllerParams,
        top: f64,
        rng: &mut R,
    ) -> SelectionDecision {
        let server = view.server;
        match self.kind {
            PolicyKind::Famus | PolicyKind::Greedy => {
                // Greedy minimises the unweighted cost, which has the same
                // minimiser as any positive multiple of it
                let balance = if self.kind == PolicyKind::Famus {
                    params.balance
                } else {
                    1.0
                };
                let cands = params.contract_candidates(view, top, balance);
                let sel = solve_client_subset(&params.subset_objective(balance), &cands);
                let picked: Vec<&ViewCandidate> = sel.chosen.iter().map(|&i| &view.candidates[i]).collect();
                contract_decision(params, server, &picked, top)
            }
            PolicyKind::Ncf | PolicyKind::Ea | PolicyKind::Fixed => {
                let all: Vec<&ViewCandidate> = view.candidates.iter().collect();
                contract_decision(params, server, &all, top)
            }
            PolicyKind::Random => {
                let picked: Vec<&ViewCandidate> = view.candidates.iter().filter(|_| rng.random_bool(0.5)).collect();
                let payment: f64 = picked.iter().map(|c| c.nominal_cost).sum();
                let mass: f64 = picked.iter().map(|c| c.data_size).sum();
                SelectionDecision {
                    server,
                    clients: picked.iter().map(|c| c.client).collect(),
                    offer: Offer::PayCost,
                    expected_cost: params.mu2 * (params.server_fee[server] + payment)
                        + params.mu1 * params.accuracy_loss(mass),
                }
            }
        }
    }
}

fn contract_decision(
    params: &ControllerParams,
    server: usize,
    picked: &[&ViewCandidate],
    top: f64,
) -> SelectionDecision {
    let pairs: Vec<(f64, f64)> = picked.iter().map(|c| (c.top_probability, c.data_size)).collect();
    let mut clients: Vec<usize> = picked.iter().map(|c| c.client).collect();
    clients.sort_unstable();
    SelectionDecision {
        server,
        clients,
        offer: Offer::Contract,
        expected_cost: expected_cluster_cost(params, server, true, &pairs, top),
    }
}

fn uniform_subset<R: Rng + ?Sized>(rng: &mut R, servers: usize, tasks: usize) -> Vec<usize> {
    let mut s = sample(rng, servers, tasks.min(servers)).into_vec();
    s.sort_unstable();
    s
}
