//! Per-server service quality, Beta reputation, virtual unfairness queues
//! and Jain's fairness index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default positive-service threshold for `n` servers: `exp(-1/n)`, the
/// quality every server gets when all accuracy losses are equal.
pub fn default_sigma0(servers: usize) -> f64 {
    (-1.0 / servers as f64).exp()
}

/// `sigma_n = exp(-AL_n / sum AL)` for every server.
pub fn service_quality(al_values: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = al_values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedServiceQuality);
    }
    Ok(al_values.iter().map(|al| (-al / total).exp()).collect())
}

/// Beta reputation from counts of positive and negative services.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReputationState {
    pub positive: u64,
    pub negative: u64,
}

impl ReputationState {
    pub fn new(positive: u64, negative: u64) -> Self {
        Self { positive, negative }
    }

    /// `(phi + 1) / (phi + psi + 2)`, the mean of Beta(phi+1, psi+1).
    pub fn reputation(&self) -> f64 {
        (self.positive as f64 + 1.0) / ((self.positive + self.negative) as f64 + 2.0)
    }
}

/// Counts a service as positive when `sigma >= sigma0`.
pub fn update_reputation(state: ReputationState, sigma: f64, sigma0: f64) -> ReputationState {
    if sigma >= sigma0 {
        ReputationState {
            positive: state.positive + 1,
            ..state
        }
    } else {
        ReputationState {
            negative: state.negative + 1,
            ..state
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualQueue {
    pub backlog: f64,
    /// Unfairness discount `epsilon` in `[0, 1]`.
    pub discount: f64,
}

impl VirtualQueue {
    pub fn new(discount: f64) -> Self {
        Self { backlog: 0.0, discount }
    }

    /// Unfairness added in a slot where the server is left idle.
    pub fn arrival(&self, reputation: f64) -> f64 {
        self.discount * reputation
    }
}

/// `Q' = max(Q + eps*g*[idle] - delegated, 0)`.
pub fn update_queue(queue: VirtualQueue, reputation: f64, delegated: bool) -> VirtualQueue {
    let change = if delegated { -1.0 } else { queue.arrival(reputation) };
    VirtualQueue {
        backlog: (queue.backlog + change).max(0.0),
        ..queue
    }
}

/// Quadratic Lyapunov function `sum Q^2 / 2`.
pub fn lyapunov(backlogs: &[f64]) -> f64 {
    0.5 * backlogs.iter().map(|q| q * q).sum::<f64>()
}

/// Right-hand side of the one-slot drift bound
/// `L(next) - L(now) <= N*theta + sum Q (eps*g*[idle] - delegated)`, `theta = 1`.
pub fn drift_bound(backlogs: &[f64], arrivals: &[f64], delegated: &[bool]) -> f64 {
    let theta = 1.0;
    backlogs.len() as f64 * theta
        + backlogs
            .iter()
            .zip(arrivals)
            .zip(delegated)
            .map(|((q, a), &d)| q * if d { -1.0 } else { *a })
            .sum::<f64>()
}

/// Time-averaged backlog and least-squares slope over the last half of a
/// queue history (a proxy for sublinear growth).
pub fn stability_stat(history: &[f64]) -> (f64, f64) {
    if history.is_empty() {
        return (0.0, 0.0);
    }
    let mean = history.iter().sum::<f64>() / history.len() as f64;
    let tail = &history[history.len() / 2..];
    (mean, ls_slope(tail))
}

fn ls_slope(y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let xm = (n - 1) as f64 / 2.0;
    let ym = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (v - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Delegation counts `x_n` and accumulated service quality `sigma_n` per
/// server.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FairnessLedger {
    pub delegations: Vec<u64>,
    pub quality: Vec<f64>,
}

impl FairnessLedger {
    pub fn new(servers: usize) -> Self {
        Self {
            delegations: vec![0; servers],
            quality: vec![0.0; servers],
        }
    }

    pub fn record(&mut self, server: usize, delegated: bool, sigma: f64) {
        self.delegations[server] += u64::from(delegated);
        self.quality[server] += sigma;
    }

    /// Per-server ratios `x_n / sigma_n`.
    pub fn ratios(&self) -> Result<Vec<f64>> {
        self.delegations
            .iter()
            .zip(&self.quality)
            .enumerate()
            .map(|(server, (&x, &s))| {
                if s > 0.0 {
                    Ok(x as f64 / s)
                } else {
                    Err(Error::UndefinedRatio { server })
                }
            })
            .collect()
    }

    pub fn jfi(&self) -> Result<f64> {
        jfi_of_ratios(&self.ratios()?)
    }
}

/// `(sum r)^2 / (N sum r^2)`. Ratios are scaled by their maximum first so
/// equal ratios give exactly 1.
pub fn jfi_of_ratios(ratios: &[f64]) -> Result<f64> {
    let max = ratios.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::UndefinedFairness);
    }
    let (s, s2) = ratios
        .iter()
        .map(|r| r / max)
        .fold((0.0, 0.0), |(s, s2), r| (s + r, s2 + r * r));
    Ok((s * s / (ratios.len() as f64 * s2)).min(1.0))
}
