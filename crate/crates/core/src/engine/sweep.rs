//! One-axis parameter sweeps over seeds and policies.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::PolicyKind;
use crate::engine::config::SimConfig;
use crate::engine::metrics::RunSummary;
use crate::engine::sim::Simulation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Number of clients `M`.
    M,
    /// Number of servers `N`.
    N,
    /// Number of type levels.
    Gamma,
    /// Trade-off parameter `V`.
    V,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::M => "m",
            Axis::N => "n",
            Axis::Gamma => "gamma",
            Axis::V => "v",
        }
    }

    /// `base` with this axis set to `value`. Count axes need a
    /// non-negative integer.
    pub fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::config(format!(
                    "sweep axis {} needs whole numbers, got {value}",
                    self.name()
                )))
            }
        };
        let mut cfg = base.clone();
        match self {
            Axis::M => cfg.clients = count()?,
            Axis::N => cfg.servers = count()?,
            Axis::Gamma => cfg.type_levels = count()?,
            Axis::V => cfg.balance = value,
        }
        Ok(cfg)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "clients" => Ok(Axis::M),
            "n" | "servers" => Ok(Axis::N),
            "gamma" | "types" => Ok(Axis::Gamma),
            "v" | "balance" => Ok(Axis::V),
            other => Err(Error::config(format!(
                "unknown sweep axis `{other}` (expected m, n, gamma or v)"
            ))),
        }
    }
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub policy: PolicyKind,
    pub seed: u64,
    pub summary: RunSummary,
}

/// Seed-averaged metrics for one `(x, policy)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub policy: PolicyKind,
    pub runs: usize,
    pub cost_mean: f64,
    pub cost_se: f64,
    pub accuracy_loss_mean: f64,
    pub accuracy_loss_se: f64,
    pub jfi_mean: f64,
    pub jfi_se: f64,
}

/// Runs every `(value, policy, seed)` combination in parallel. Each run
/// shares nothing with the others but the base config. Results come back
/// ordered by value, then policy, then seed.
pub fn sweep(
    base: &SimConfig,
    axis: Axis,
    values: &[f64],
    policies: &[PolicyKind],
    seeds: &[u64],
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    let mut jobs = Vec::new();
    for &x in values {
        let at = axis.apply(base, x)?;
        for &policy in policies {
            for &seed in seeds {
                let cfg = SimConfig {
                    policy,
                    seed,
                    ..at.clone()
                };
                cfg.validate()?;
                jobs.push((x, cfg));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(x, cfg)| {
            let (policy, seed) = (cfg.policy, cfg.seed);
            let out = Simulation::new(cfg)?.run_to_end()?;
            Ok(SweepPoint {
                x,
                policy,
                seed,
                summary: out.summary,
            })
        })
        .collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Means and standard errors across seeds, one row per `(x, policy)` in
/// first-seen order. Runs with an undefined JFI are left out of the JFI
/// columns only.
pub fn aggregate(points: &[SweepPoint]) -> Vec<SweepRow> {
    let mut keys: Vec<(f64, PolicyKind)> = Vec::new();
    for p in points {
        if !keys.iter().any(|k| k.0 == p.x && k.1 == p.policy) {
            keys.push((p.x, p.policy));
        }
    }
    keys.into_iter()
        .map(|(x, policy)| {
            let group: Vec<&RunSummary> = points
                .iter()
                .filter(|p| p.x == x && p.policy == policy)
                .map(|p| &p.summary)
                .collect();
            let cost: Vec<f64> = group.iter().map(|s| s.time_avg_cost).collect();
            let al: Vec<f64> = group.iter().map(|s| s.time_avg_accuracy_loss).collect();
            let jfi: Vec<f64> = group.iter().filter_map(|s| s.jfi).collect();
            let (cost_mean, cost_se) = mean_se(&cost);
            let (accuracy_loss_mean, accuracy_loss_se) = mean_se(&al);
            let (jfi_mean, jfi_se) = mean_se(&jfi);
            SweepRow {
                x,
                policy,
                runs: group.len(),
                cost_mean,
                cost_se,
                accuracy_loss_mean,
                accuracy_loss_se,
                jfi_mean,
                jfi_se,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample sd = sqrt(5/3), se = sd / 2
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mean_se(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn axis_parsing_and_application() {
        assert_eq!("gamma".parse::<Axis>().unwrap(), Axis::Gamma);
        assert_eq!("M".parse::<Axis>().unwrap(), Axis::M);
        assert!("k".parse::<Axis>().is_err());
        let base = SimConfig::default();
        assert_eq!(Axis::Gamma.apply(&base, 50.0).unwrap().type_levels, 50);
        assert_eq!(Axis::V.apply(&base, 0.1).unwrap().balance, 0.1);
        assert!(Axis::M.apply(&base, 2.5).is_err());
    }

    #[test]
    fn empty_values_rejected() {
        assert!(sweep(&SimConfig::default(), Axis::V, &[], &[PolicyKind::Famus], &[1]).is_err());
    }
}
