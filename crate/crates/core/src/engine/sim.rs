//! The slot loop.
//!
//! Each slot: clients move and clusters are recomputed; every client's
//! cost and type are computed at the nominal bandwidth share; on a release
//! slot the policy delegates tasks; servers holding a task select clients;
//! selected clients respond to the menu with their own type level;
//! participants upload at the actual share; queues and reputations are
//! updated from the slot's accuracy losses.

use rand::Rng;

use crate::channel::{self, ClientProfile};
use crate::contract::{best_response, optimal_contract, ContractMenu, TypeBelief, TypeGrid};
use crate::controller::{ClusterView, ControllerParams, Offer, Policy, PolicyKind, SelectionDecision, ViewCandidate};
use crate::engine::config::{Scenario, SimConfig};
use crate::engine::metrics::{RunSummary, ServerSlot, SlotMetrics, SUMMARY_SCHEMA};
use crate::error::{Error, Result};
use crate::fairness::{
    service_quality, stability_stat, update_queue, update_reputation, FairnessLedger, ReputationState, VirtualQueue,
};
use crate::mobility::{cluster_membership, init_ppp, step_gauss_markov, Area, ClientState, Point};
use crate::rng::{self, Stream};

/// Grid, menu and beliefs, available once warm-up is over.
#[derive(Debug, Clone)]
struct Contracting {
    grid: TypeGrid,
    menu: ContractMenu,
    belief: TypeBelief,
}

/// Per-client quantities computed at the start of a slot.
#[derive(Debug, Clone, Copy)]
struct Nominal {
    gain: f64,
    cost: f64,
    type_value: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    params: ControllerParams,
    area: Area,
    sites: Vec<Point>,
    epsilon: f64,
    sigma0: f64,
    profiles: Vec<ClientProfile>,
    clients: Vec<ClientState>,
    clusters: Vec<Vec<usize>>,
    queues: Vec<VirtualQueue>,
    reputations: Vec<ReputationState>,
    holding: Vec<bool>,
    policy: Policy,
    warmup_policy: Policy,
    contracting: Option<Contracting>,
    /// `(server, client, type value)` seen during warm-up.
    warmup_types: Vec<(usize, usize, f64)>,
    ledger: FairnessLedger,
    slot: usize,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub slots: Vec<SlotMetrics>,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let area = cfg.area()?;
        let n = cfg.servers;
        let profiles = (0..cfg.clients)
            .map(|m| {
                let mut r = rng::stream(cfg.seed, Stream::Profile, m as u64, 0);
                ClientProfile {
                    alpha: r.random_range(cfg.alpha.min..=cfg.alpha.max),
                    beta: r.random_range(cfg.beta.min..=cfg.beta.max),
                    data_size: r.random_range(cfg.data_size_mb.min..=cfg.data_size_mb.max),
                }
            })
            .collect();
        let clients = init_ppp(&area, cfg.clients, &cfg.mobility, cfg.seed)?;
        let clusters = cluster_membership(&clients, &area);
        let epsilon = cfg.epsilon();
        Ok(Self {
            params: cfg.controller_params(),
            sites: (0..n).map(|i| area.cluster_center(i)).collect(),
            epsilon,
            sigma0: cfg.sigma0(),
            profiles,
            clients,
            clusters,
            queues: vec![VirtualQueue::new(epsilon); n],
            reputations: vec![ReputationState::default(); n],
            holding: vec![false; n],
            policy: Policy::new(cfg.policy),
            warmup_policy: Policy::new(PolicyKind::Random),
            contracting: None,
            warmup_types: Vec::new(),
            ledger: FairnessLedger::new(n),
            slot: 0,
            area,
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn finished(&self) -> bool {
        self.slot >= self.cfg.horizon
    }

    pub fn clients(&self) -> &[ClientState] {
        &self.clients
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn grid(&self) -> Option<&TypeGrid> {
        self.contracting.as_ref().map(|c| &c.grid)
    }

    pub fn ledger(&self) -> &FairnessLedger {
        &self.ledger
    }

    pub fn queues(&self) -> Vec<f64> {
        self.queues.iter().map(|q| q.backlog).collect()
    }

    /// Advances one slot. Returns the slot's metrics once warm-up is over.
    pub fn step(&mut self) -> Result<Option<SlotMetrics>> {
        let t = self.slot;
        if t == self.cfg.warmup {
            self.build_contracting()?;
        }
        let cfg = &self.cfg;
        let seed = cfg.seed;
        let measuring = t >= cfg.warmup;

        if t > 0 {
            for (m, c) in self.clients.iter_mut().enumerate() {
                let mut r = rng::stream(seed, Stream::Mobility, m as u64, t as u64);
                *c = step_gauss_markov(c, &self.area, cfg.slot_len, &cfg.mobility, &mut r);
            }
            self.clusters = cluster_membership(&self.clients, &self.area);
        }

        let nominal = self.nominal_costs(t)?;
        let top = self.contracting.as_ref().map_or(1.0, |c| c.grid.top());
        let views = self.views(&nominal);

        let release = cfg.is_release(t);
        if release {
            let mut r = rng::stream(seed, Stream::Delegation, 0, t as u64);
            let policy = if measuring {
                &mut self.policy
            } else {
                &mut self.warmup_policy
            };
            self.holding = policy.delegate(&views, &self.params, self.epsilon, top, &mut r).delegated();
        } else if !cfg.hold_delegation {
            self.holding.fill(false);
        }

        let n_servers = cfg.servers;
        let mut rows = Vec::with_capacity(n_servers);
        let mut ic_violations = 0;
        for n in 0..n_servers {
            let (row, bad) = self.serve(n, t, measuring, &views[n], &nominal, top)?;
            ic_violations += bad;
            rows.push(row);
        }

        // fairness bookkeeping
        let al: Vec<f64> = rows.iter().map(|r: &ServerSlot| r.accuracy_loss).collect();
        let sigma = service_quality(&al).ok();
        for (n, row) in rows.iter_mut().enumerate() {
            row.queue = self.queues[n].backlog;
            row.reputation = self.reputations[n].reputation();
            row.sigma = sigma.as_ref().map_or(f64::NAN, |s| s[n]);
            self.queues[n] = update_queue(self.queues[n], row.reputation, row.delegated);
            if let Some(s) = &sigma {
                self.reputations[n] = update_reputation(self.reputations[n], s[n], self.sigma0);
            }
        }

        // what the servers learn about client types
        if let Some(c) = &mut self.contracting {
            for n in (0..n_servers).filter(|&n| self.holding[n]) {
                for &m in &self.clusters[n] {
                    c.belief.record(n, m, c.grid.level_of(nominal[m].type_value));
                }
            }
        } else {
            for (n, members) in self.clusters.iter().enumerate() {
                for &m in members {
                    self.warmup_types.push((n, m, nominal[m].type_value));
                }
            }
        }

        self.slot += 1;
        if !measuring {
            return Ok(None);
        }
        for (n, row) in rows.iter().enumerate() {
            self.ledger.record(n, row.delegated, if row.sigma.is_nan() { 0.0 } else { row.sigma });
        }
        let held: Vec<f64> = rows.iter().filter(|r| r.delegated).map(|r| r.accuracy_loss).collect();
        Ok(Some(SlotMetrics {
            slot: t,
            release,
            cost: rows.iter().map(|r| r.cost).sum(),
            expected_cost: rows.iter().map(|r| r.expected_cost).sum(),
            accuracy_loss: (!held.is_empty()).then(|| held.iter().sum::<f64>() / held.len() as f64),
            servers: rows,
            ic_violations,
        }))
    }

    fn build_contracting(&mut self) -> Result<()> {
        let samples: Vec<f64> = self.warmup_types.iter().map(|o| o.2).collect();
        let grid = match self.cfg.scenario {
            Scenario::PeriodicContract => {
                TypeGrid::from_samples(&samples, self.cfg.type_levels, self.cfg.top_quantile())?
            }
            Scenario::UniformContract => TypeGrid::uniform_from_samples(&samples)?,
        };
        let mut belief = TypeBelief::new(self.cfg.servers, self.cfg.clients, grid.len());
        for &(n, m, ty) in &self.warmup_types {
            belief.record(n, m, grid.level_of(ty));
        }
        self.warmup_types = Vec::new();
        self.contracting = Some(Contracting {
            menu: optimal_contract(&grid),
            grid,
            belief,
        });
        Ok(())
    }

    fn nominal_costs(&self, t: usize) -> Result<Vec<Nominal>> {
        let link = &self.cfg.link;
        let mut out = vec![
            Nominal {
                gain: 0.0,
                cost: 0.0,
                type_value: 0.0,
            };
            self.clients.len()
        ];
        for (n, members) in self.clusters.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let share = channel::bandwidth_share(link.bandwidth_per_cluster, members.len())?;
            for &m in members {
                let mut r = rng::stream(self.cfg.seed, Stream::Fading, m as u64, t as u64);
                let gain = channel::channel_gain(link, self.sites[n], self.clients[m].position, &mut r);
                let rate = channel::shannon_rate(share, link.tx_power, gain, link.noise_psd) / 1e6;
                let cost = channel::participation_cost(&self.profiles[m], rate)?;
                out[m] = Nominal {
                    gain,
                    cost,
                    type_value: 1.0 / cost,
                };
            }
        }
        Ok(out)
    }

    fn views(&self, nominal: &[Nominal]) -> Vec<ClusterView> {
        self.clusters
            .iter()
            .enumerate()
            .map(|(n, members)| ClusterView {
                server: n,
                queue: self.queues[n].backlog,
                reputation: self.reputations[n].reputation(),
                candidates: members
                    .iter()
                    .map(|&m| ViewCandidate {
                        client: m,
                        data_size: self.profiles[m].data_size,
                        top_probability: self
                            .contracting
                            .as_ref()
                            .map_or(1.0, |c| c.belief.top_probability(n, m)),
                        nominal_cost: nominal[m].cost,
                    })
                    .collect(),
            })
            .collect()
    }

    /// Selection, responses and realised cost for one server. Returns the
    /// row (queue, reputation and sigma filled in later) and the number of
    /// contract participants below the top level.
    fn serve(
        &self,
        n: usize,
        t: usize,
        measuring: bool,
        view: &ClusterView,
        nominal: &[Nominal],
        top: f64,
    ) -> Result<(ServerSlot, usize)> {
        let params = &self.params;
        let idle_al = params.al_max;
        if !self.holding[n] {
            return Ok((
                ServerSlot {
                    queue: 0.0,
                    reputation: 0.0,
                    sigma: f64::NAN,
                    delegated: false,
                    accuracy_loss: idle_al,
                    selected: 0,
                    participants: 0,
                    rewards: 0.0,
                    cost: params.mu1 * idle_al,
                    expected_cost: params.mu1 * idle_al,
                },
                0,
            ));
        }
        let mut r = rng::stream(self.cfg.seed, Stream::Selection, n as u64, t as u64);
        let policy = if measuring { &self.policy } else { &self.warmup_policy };
        let decision: SelectionDecision = policy.select(view, params, top, &mut r);

        // who takes part, and the reward each contract participant is owed
        let mut takers: Vec<(usize, Option<f64>)> = Vec::new();
        let mut ic_violations = 0;
        match decision.offer {
            Offer::Contract => {
                let c = self
                    .contracting
                    .as_ref()
                    .ok_or_else(|| Error::config("contract offered before the type grid exists"))?;
                for &m in &decision.clients {
                    let level = c.grid.level_of(nominal[m].type_value);
                    if let Some(j) = best_response(&c.menu, &c.grid, level) {
                        let item = c.menu.items[j];
                        if item.participate {
                            ic_violations += usize::from(level != c.grid.top_index());
                            takers.push((m, Some(item.reward)));
                        }
                    }
                }
            }
            Offer::PayCost => takers.extend(decision.clients.iter().map(|&m| (m, None))),
        }

        let link = &self.cfg.link;
        let mut rewards = 0.0;
        let mut mass = 0.0;
        if !takers.is_empty() {
            let share = channel::bandwidth_share(link.bandwidth_per_cluster, takers.len())?;
            for &(m, reward) in &takers {
                mass += self.profiles[m].data_size;
                rewards += match reward {
                    Some(r) => r,
                    None => {
                        let rate = channel::shannon_rate(share, link.tx_power, nominal[m].gain, link.noise_psd) / 1e6;
                        channel::participation_cost(&self.profiles[m], rate)?
                    }
                };
            }
        }
        let al = params.accuracy_loss(mass);
        Ok((
            ServerSlot {
                queue: 0.0,
                reputation: 0.0,
                sigma: f64::NAN,
                delegated: true,
                accuracy_loss: al,
                selected: decision.clients.len(),
                participants: takers.len(),
                rewards,
                cost: params.mu2 * (params.server_fee[n] + rewards) + params.mu1 * al,
                expected_cost: decision.expected_cost,
            },
            ic_violations,
        ))
    }

    /// Runs the remaining slots and summarises the measured ones.
    pub fn run_to_end(mut self) -> Result<RunOutput> {
        let mut slots = Vec::with_capacity(self.cfg.measured_slots());
        while !self.finished() {
            if let Some(s) = self.step()? {
                slots.push(s);
            }
        }
        if self.contracting.is_none() {
            // horizon == warmup: the grid is still built so the run is usable
            self.build_contracting()?;
        }
        let summary = self.summarise(&slots);
        Ok(RunOutput { summary, slots })
    }

    fn summarise(&self, slots: &[SlotMetrics]) -> RunSummary {
        let cfg = &self.cfg;
        let count = slots.len().max(1) as f64;
        let als: Vec<f64> = slots.iter().filter_map(|s| s.accuracy_loss).collect();
        let (queue_mean, queue_tail_slope) = (0..cfg.servers)
            .map(|n| {
                let h: Vec<f64> = slots.iter().map(|s| s.servers[n].queue).collect();
                stability_stat(&h)
            })
            .unzip();
        RunSummary {
            schema: SUMMARY_SCHEMA.to_string(),
            policy: cfg.policy.to_string(),
            scenario: match cfg.scenario {
                Scenario::PeriodicContract => "periodic-contract".into(),
                Scenario::UniformContract => "uniform-contract".into(),
            },
            seed: cfg.seed,
            servers: cfg.servers,
            clients: cfg.clients,
            tasks: cfg.tasks,
            type_levels: self.grid().map_or(cfg.type_levels, TypeGrid::len),
            balance: cfg.balance,
            epsilon: self.epsilon,
            sigma0: self.sigma0,
            measured_slots: slots.len(),
            grid: self.grid().map(|g| g.levels().to_vec()).unwrap_or_default(),
            time_avg_cost: slots.iter().map(|s| s.cost).sum::<f64>() / count,
            time_avg_expected_cost: slots.iter().map(|s| s.expected_cost).sum::<f64>() / count,
            time_avg_accuracy_loss: if als.is_empty() {
                f64::NAN
            } else {
                als.iter().sum::<f64>() / als.len() as f64
            },
            time_avg_participants: slots
                .iter()
                .map(|s| s.servers.iter().map(|r| r.participants).sum::<usize>() as f64)
                .sum::<f64>()
                / count,
            jfi: self.ledger.jfi().ok(),
            delegation_counts: self.ledger.delegations.clone(),
            quality_sums: self.ledger.quality.clone(),
            queue_mean,
            queue_tail_slope,
            ic_violations: slots.iter().map(|s| s.ic_violations).sum(),
        }
    }
}

/// Validates the config, then runs warm-up and the measured horizon.
pub fn run(cfg: SimConfig) -> Result<RunOutput> {
    Simulation::new(cfg)?.run_to_end()
}
