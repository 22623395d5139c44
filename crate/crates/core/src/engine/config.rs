//! Simulation configuration, read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::LinkParams;
use crate::controller::{default_al_max, ControllerParams, PolicyKind};
use crate::error::{Error, Result};
use crate::fairness::default_sigma0;
use crate::mobility::{Area, MobilityParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Full type grid rebuilt from warm-up data; optimal menu over it.
    PeriodicContract,
    /// A single menu item for everybody, priced at the median type.
    UniformContract,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    /// m
    pub width: f64,
    /// m
    pub height: f64,
    /// `[cols, rows]`; chosen automatically from the server count when absent.
    pub grid: Option<[usize; 2]>,
}

impl Default for AreaConfig {
    fn default() -> Self {
        Self {
            width: 100.0,
            height: 200.0,
            grid: None,
        }
    }
}

/// Server fee, either one value for all servers or one per server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServerFee {
    Uniform(f64),
    PerServer(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Servers / clusters, `N`.
    pub servers: usize,
    /// Mobile clients, `M`.
    pub clients: usize,
    /// Tasks released each period, `K`.
    pub tasks: usize,
    /// Type levels, `Gamma`.
    pub type_levels: usize,
    /// Cost/fairness trade-off, `V`.
    pub balance: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Task period, s.
    pub tau: f64,
    /// Slot length, s.
    pub slot_len: f64,
    /// Total slots simulated, warm-up included.
    pub horizon: usize,
    /// Leading slots used to build the type grid; not measured.
    pub warmup: usize,
    pub seed: u64,
    pub policy: PolicyKind,
    pub scenario: Scenario,
    pub area: AreaConfig,
    /// Per-client training data, MB.
    pub data_size_mb: Range,
    /// Per-client cost per Mbit/s. The default cost scale makes the
    /// top-type reward worth about one average client's data in accuracy
    /// loss at the default weights; much dearer clients are never recruited.
    pub alpha: Range,
    /// Per-client cost per MB.
    pub beta: Range,
    pub link: LinkParams,
    pub mobility: MobilityParams,
    /// Quantile of warm-up types used as the top level. Defaults to
    /// `Gamma / (Gamma + 1)`, so finer grids reach further into the tail.
    pub top_quantile: Option<f64>,
    pub server_fee: ServerFee,
    pub force_assign_all: bool,
    /// A task delegated at a release is held for the whole period.
    pub hold_delegation: bool,
    /// Positive-service threshold; defaults to `exp(-1/N)`.
    pub sigma0: Option<f64>,
    /// Unfairness discount; defaults to `K/N`.
    pub epsilon: Option<f64>,
    /// Accuracy loss at zero data; defaults to `1 + slot_len/tau`.
    pub al_max: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            servers: 10,
            clients: 200,
            tasks: 8,
            type_levels: 20,
            balance: 10.0,
            mu1: 0.1,
            mu2: 0.9,
            tau: 1.0,
            slot_len: 0.1,
            horizon: 2050,
            warmup: 50,
            seed: 1,
            policy: PolicyKind::Famus,
            scenario: Scenario::PeriodicContract,
            area: AreaConfig::default(),
            data_size_mb: Range::new(100.0, 200.0),
            alpha: Range::new(0.5e-5, 1.5e-5),
            beta: Range::new(1e-5, 3e-5),
            link: LinkParams::default(),
            mobility: MobilityParams::default(),
            top_quantile: None,
            server_fee: ServerFee::Uniform(1.0),
            force_assign_all: true,
            hold_delegation: true,
            sigma0: None,
            epsilon: None,
            al_max: None,
        }
    }
}

impl SimConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: "<inline>".into(),
            source,
        })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        let positive = |name: &str, x: f64, v: &mut Vec<String>| {
            if !(x.is_finite() && x > 0.0) {
                v.push(format!("{name} must be positive, got {x}"));
            }
        };
        let non_negative = |name: &str, x: f64, v: &mut Vec<String>| {
            if !(x.is_finite() && x >= 0.0) {
                v.push(format!("{name} must be >= 0, got {x}"));
            }
        };
        if self.servers == 0 {
            v.push("servers must be at least 1".into());
        }
        if self.clients == 0 {
            v.push("clients must be at least 1".into());
        }
        if self.tasks == 0 {
            v.push("tasks must be at least 1".into());
        }
        if self.tasks > self.servers {
            v.push(format!(
                "tasks must not exceed servers (K <= N), got K={} N={}",
                self.tasks, self.servers
            ));
        }
        if self.type_levels == 0 {
            v.push("type_levels must be at least 1".into());
        }
        non_negative("balance", self.balance, &mut v);
        non_negative("mu1", self.mu1, &mut v);
        non_negative("mu2", self.mu2, &mut v);
        positive("tau", self.tau, &mut v);
        positive("slot_len", self.slot_len, &mut v);
        if self.slot_len > self.tau {
            v.push(format!("slot_len ({}) must not exceed tau ({})", self.slot_len, self.tau));
        } else if self.tau > 0.0 && self.slot_len > 0.0 {
            let ratio = self.tau / self.slot_len;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                v.push(format!(
                    "slot_len ({}) must divide tau ({}) so releases fall on slot boundaries",
                    self.slot_len, self.tau
                ));
            }
        }
        if self.warmup == 0 {
            v.push("warmup must be at least 1 slot (the type grid is built from it)".into());
        }
        if self.horizon < self.warmup {
            v.push(format!(
                "horizon ({}) must be at least warmup ({})",
                self.horizon, self.warmup
            ));
        }
        for (name, r, allow_zero) in [
            ("data_size_mb", self.data_size_mb, false),
            ("alpha", self.alpha, true),
            ("beta", self.beta, true),
        ] {
            if allow_zero {
                non_negative(&format!("{name}.min"), r.min, &mut v);
            } else {
                positive(&format!("{name}.min"), r.min, &mut v);
            }
            if !(r.max >= r.min && r.max.is_finite()) {
                v.push(format!("{name}.max ({}) must be >= {name}.min ({})", r.max, r.min));
            }
        }
        if !(self.alpha.min > 0.0 || self.beta.min > 0.0) {
            v.push("alpha.min or beta.min must be positive, or some client could participate for free".into());
        }
        positive("area.width", self.area.width, &mut v);
        positive("area.height", self.area.height, &mut v);
        if let Some([c, r]) = self.area.grid {
            if c * r != self.servers {
                v.push(format!(
                    "area.grid {c} x {r} has {} cells but there are {} servers",
                    c * r,
                    self.servers
                ));
            }
        }
        if let Some(q) = self.top_quantile {
            if !(q > 0.0 && q <= 1.0) {
                v.push(format!("top_quantile must lie in (0, 1], got {q}"));
            }
        }
        match &self.server_fee {
            ServerFee::Uniform(h) => non_negative("server_fee", *h, &mut v),
            ServerFee::PerServer(fees) => {
                if fees.len() != self.servers {
                    v.push(format!(
                        "server_fee lists {} fees for {} servers",
                        fees.len(),
                        self.servers
                    ));
                }
                for (n, h) in fees.iter().enumerate() {
                    non_negative(&format!("server_fee[{n}]"), *h, &mut v);
                }
            }
        }
        if let Some(s) = self.sigma0 {
            if !(s > 0.0 && s <= 1.0) {
                v.push(format!("sigma0 must lie in (0, 1], got {s}"));
            }
        }
        if let Some(e) = self.epsilon {
            if !(0.0..=1.0).contains(&e) {
                v.push(format!("epsilon must lie in [0, 1], got {e}"));
            }
        }
        if let Some(a) = self.al_max {
            positive("al_max", a, &mut v);
        }
        v.extend(self.link.validate());
        v.extend(self.mobility.validate());
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn slots_per_period(&self) -> usize {
        (self.tau / self.slot_len).round() as usize
    }

    pub fn is_release(&self, slot: usize) -> bool {
        release_schedule(slot, self.tau, self.slot_len)
    }

    pub fn measured_slots(&self) -> usize {
        self.horizon - self.warmup
    }

    pub fn area(&self) -> Result<Area> {
        match self.area.grid {
            Some([c, r]) => Area::new(self.area.width, self.area.height, c, r),
            None => Area::with_clusters(self.area.width, self.area.height, self.servers),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
            .unwrap_or(self.tasks as f64 / self.servers as f64)
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0.unwrap_or_else(|| default_sigma0(self.servers))
    }

    pub fn al_max(&self) -> f64 {
        self.al_max.unwrap_or_else(|| default_al_max(self.tau, self.slot_len))
    }

    pub fn top_quantile(&self) -> f64 {
        self.top_quantile
            .unwrap_or(self.type_levels as f64 / (self.type_levels as f64 + 1.0))
    }

    pub fn fees(&self) -> Vec<f64> {
        match &self.server_fee {
            ServerFee::Uniform(h) => vec![*h; self.servers],
            ServerFee::PerServer(f) => f.clone(),
        }
    }

    pub fn controller_params(&self) -> ControllerParams {
        ControllerParams {
            balance: self.balance,
            mu1: self.mu1,
            mu2: self.mu2,
            server_fee: self.fees(),
            tau: self.tau,
            slot_len: self.slot_len,
            task_count: self.tasks,
            force_assign_all: self.force_assign_all,
            al_max: self.al_max(),
        }
    }
}

/// Tasks are released on slots whose start time is a multiple of `tau`.
pub fn release_schedule(slot: usize, tau: f64, slot_len: f64) -> bool {
    let period = (tau / slot_len).round().max(1.0) as usize;
    slot.is_multiple_of(period)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.slots_per_period(), 10);
        assert!((c.epsilon() - 0.8).abs() < 1e-15);
        assert!((c.al_max() - 1.1).abs() < 1e-15);
        assert_eq!(c.area().unwrap().grid(), (2, 5));
    }

    #[test]
    fn release_examples() {
        let releases: Vec<usize> = (0..35).filter(|&t| release_schedule(t, 1.0, 0.1)).collect();
        assert_eq!(releases, vec![0, 10, 20, 30]);
        assert!((0..20).all(|t| release_schedule(t, 0.5, 0.5)));
        for total in 1..200usize {
            let count = (0..total).filter(|&t| release_schedule(t, 1.0, 0.1)).count();
            assert_eq!(count, ((total - 1) as f64 * 0.1 / 1.0 + 1e-9).floor() as usize + 1);
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let c = SimConfig {
            tasks: 12,
            slot_len: 0.3,
            horizon: 10,
            warmup: 50,
            ..SimConfig::default()
        };
        match c.validate() {
            Err(Error::Config(v)) => {
                assert_eq!(v.len(), 3, "{v:?}");
                assert!(v[0].contains("K <= N"));
                assert!(v[1].contains("divide"));
                assert!(v[2].contains("horizon"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_and_partial_input() {
        let c = SimConfig::default();
        assert_eq!(SimConfig::from_json_str(&c.to_json()).unwrap(), c);
        let partial = SimConfig::from_json_str(r#"{"servers": 4, "tasks": 2, "server_fee": [1, 2, 3, 4]}"#).unwrap();
        assert_eq!(partial.servers, 4);
        assert_eq!(partial.fees(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(partial.clients, 200);
        assert!(SimConfig::from_json_str(r#"{"severs": 4}"#).is_err());
        let p = SimConfig::from_json_str(r#"{"policy": "ncf", "scenario": "uniform-contract"}"#).unwrap();
        assert_eq!(p.policy, PolicyKind::Ncf);
        assert_eq!(p.scenario, Scenario::UniformContract);
    }
}
