//! Contract menus over a discrete type grid.
//!
//! A client's type is the reciprocal of its participation cost. Types are
//! quantised to `levels` sorted ascending: a type `t` sits at level `i`
//! when `levels[i-1] < t <= levels[i]` (with an implicit level value 0
//! below the first), and anything above the top level is clipped to it.
//! Level indices are zero-based throughout.
//!
//! A menu offers one `(participate, reward)` item per level. A client of
//! level `i` that takes item `j` earns `reward_j - participate_j / levels[i]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when checking inequalities that bind with equality
/// in exact arithmetic, e.g. `levels[top] * (1 / levels[top]) <= 1`.
pub const CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeGrid {
    levels: Vec<f64>,
}

impl TypeGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidGrid("a type grid needs at least one level".into()));
        }
        if let Some(bad) = levels.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidGrid(format!("levels must be positive and finite, found {bad}")));
        }
        if let Some(w) = levels.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidGrid(format!(
                "levels must be non-decreasing, level {} ({}) < level {} ({})",
                w + 1,
                levels[w + 1],
                w,
                levels[w]
            )));
        }
        Ok(Self { levels })
    }

    /// Builds a `count`-level grid from observed type values: the top level
    /// is the `top_quantile` empirical quantile and level `i` (one-based)
    /// is the `top_quantile * i / count` quantile.
    pub fn from_samples(samples: &[f64], count: usize, top_quantile: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidGrid("level count must be positive".into()));
        }
        if !(top_quantile > 0.0 && top_quantile <= 1.0) {
            return Err(Error::InvalidGrid(format!("top quantile must lie in (0, 1], got {top_quantile}")));
        }
        let sorted = sorted_samples(samples)?;
        let levels = (1..=count)
            .map(|i| quantile(&sorted, top_quantile * i as f64 / count as f64))
            .collect();
        Self::new(levels)
    }

    /// Single-level grid at the sample median, used for the uniform-contract
    /// scenario.
    pub fn uniform_from_samples(samples: &[f64]) -> Result<Self> {
        let sorted = sorted_samples(samples)?;
        Self::new(vec![quantile(&sorted, 0.5)])
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn top_index(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn top(&self) -> f64 {
        self.levels[self.top_index()]
    }

    pub fn value(&self, level: usize) -> f64 {
        self.levels[level]
    }

    /// Level of a type value; values above the top level clip to it.
    pub fn level_of(&self, type_value: f64) -> usize {
        self.levels
            .partition_point(|&l| l < type_value)
            .min(self.top_index())
    }
}

fn sorted_samples(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidGrid("no type samples to build a grid from".into()));
    }
    if samples.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidGrid("type samples must be positive and finite".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Linear-interpolation empirical quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractItem {
    pub participate: bool,
    pub reward: f64,
}

impl ContractItem {
    pub const DECLINE: ContractItem = ContractItem {
        participate: false,
        reward: 0.0,
    };

    fn b(&self) -> f64 {
        if self.participate {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractMenu {
    pub items: Vec<ContractItem>,
}

impl ContractMenu {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of items that ask for participation.
    pub fn participating_items(&self) -> usize {
        self.items.iter().filter(|i| i.participate).count()
    }

    /// Participation gating: a menu may ask for participation in at most
    /// one item, and in none when the client is not offered a task (its
    /// server holds no task or the client is outside the coverage).
    pub fn respects_gating(&self, offered: bool) -> bool {
        self.participating_items() <= usize::from(offered)
    }
}

/// Payoff of a client of type value `type_value` taking `item`.
pub fn payoff(item: &ContractItem, type_value: f64) -> f64 {
    item.reward - item.b() / type_value
}

/// The optimal menu: only the top level participates, and it is paid
/// exactly its cost `1 / top`.
pub fn optimal_contract(grid: &TypeGrid) -> ContractMenu {
    let mut items = vec![ContractItem::DECLINE; grid.len()];
    items[grid.top_index()] = ContractItem {
        participate: true,
        reward: 1.0 / grid.top(),
    };
    ContractMenu { items }
}

/// First condition a menu fails in the feasibility check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum FeasibilityViolation {
    LengthMismatch { items: usize, levels: usize },
    NegativeReward { level: usize },
    ParticipationNotMonotone { level: usize },
    RewardNotMonotone { level: usize },
    LowestTypeIr,
    SandwichLower { level: usize },
    SandwichUpper { level: usize },
}

impl std::fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::LengthMismatch { items, levels } => write!(f, "menu has {items} items for {levels} levels"),
            Self::NegativeReward { level } => write!(f, "negative reward at level {level}"),
            Self::ParticipationNotMonotone { level } => {
                write!(f, "participation decreases between levels {} and {level}", level - 1)
            }
            Self::RewardNotMonotone { level } => write!(f, "reward decreases between levels {} and {level}", level - 1),
            Self::LowestTypeIr => write!(f, "lowest level earns a negative payoff"),
            Self::SandwichLower { level } => write!(f, "lower participation bound violated at level {level}"),
            Self::SandwichUpper { level } => write!(f, "upper participation bound violated at level {level}"),
        }
    }
}

fn le(a: f64, b: f64) -> bool {
    a <= b + CHECK_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Necessary and sufficient feasibility conditions for a menu on `grid`:
/// monotone participation and reward, individual rationality of the lowest
/// level, and for every `i >= 1`
/// `b[i-1] + t[i-1] (r[i] - r[i-1]) <= b[i] <= b[i-1] + t[i] (r[i] - r[i-1])`.
pub fn check_feasible(menu: &ContractMenu, grid: &TypeGrid) -> Result<(), FeasibilityViolation> {
    if menu.len() != grid.len() {
        return Err(FeasibilityViolation::LengthMismatch {
            items: menu.len(),
            levels: grid.len(),
        });
    }
    let items = &menu.items;
    if let Some(level) = items.iter().position(|i| i.reward < 0.0) {
        return Err(FeasibilityViolation::NegativeReward { level });
    }
    for level in 1..items.len() {
        if items[level].b() < items[level - 1].b() {
            return Err(FeasibilityViolation::ParticipationNotMonotone { level });
        }
    }
    for level in 1..items.len() {
        if !le(items[level - 1].reward, items[level].reward) {
            return Err(FeasibilityViolation::RewardNotMonotone { level });
        }
    }
    if !le(0.0, payoff(&items[0], grid.value(0))) {
        return Err(FeasibilityViolation::LowestTypeIr);
    }
    for level in 1..items.len() {
        let (prev, cur) = (&items[level - 1], &items[level]);
        let dr = cur.reward - prev.reward;
        if !le(prev.b() + grid.value(level - 1) * dr, cur.b()) {
            return Err(FeasibilityViolation::SandwichLower { level });
        }
        if !le(cur.b(), prev.b() + grid.value(level) * dr) {
            return Err(FeasibilityViolation::SandwichUpper { level });
        }
    }
    Ok(())
}

/// Item a client of level `level` picks: the payoff-maximising item among
/// those with non-negative payoff, ties going to the higher index. `None`
/// when every item would lose money.
pub fn best_response(menu: &ContractMenu, grid: &TypeGrid, level: usize) -> Option<usize> {
    let t = grid.value(level);
    let mut best: Option<(usize, f64)> = None;
    for (j, item) in menu.items.iter().enumerate() {
        let u = payoff(item, t);
        if u < 0.0 {
            continue;
        }
        if best.is_none_or(|(_, bu)| u >= bu) {
            best = Some((j, u));
        }
    }
    best.map(|(j, _)| j)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IcIrReport {
    /// Levels whose own item yields a negative payoff.
    pub ir_failures: Vec<usize>,
    /// `(i, j)` pairs where level `i` strictly prefers item `j` to its own.
    pub ic_failures: Vec<(usize, usize)>,
}

impl IcIrReport {
    pub fn passed(&self) -> bool {
        self.ir_failures.is_empty() && self.ic_failures.is_empty()
    }
}

/// Exhaustive check of individual rationality and incentive compatibility
/// for every level against every item.
pub fn verify_ic_ir(menu: &ContractMenu, grid: &TypeGrid) -> IcIrReport {
    let mut report = IcIrReport::default();
    let n = menu.len().min(grid.len());
    for i in 0..n {
        let t = grid.value(i);
        let own = payoff(&menu.items[i], t);
        if !le(0.0, own) {
            report.ir_failures.push(i);
        }
        for (j, other) in menu.items.iter().enumerate() {
            if j != i && !le(payoff(other, t), own) {
                report.ic_failures.push((i, j));
            }
        }
    }
    report
}

/// Empirical level frequencies of one `(server, client)` history. An empty
/// history falls back to the uniform distribution.
pub fn estimate_distribution(history: &[usize], levels: usize) -> Vec<f64> {
    let mut counts = vec![0u32; levels];
    for &l in history {
        counts[l] += 1;
    }
    frequencies(&counts)
}

fn frequencies(counts: &[u32]) -> Vec<f64> {
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|&c| f64::from(c) / total as f64).collect()
}

/// Running type-level counts for every `(server, client)` pair; the
/// controller's belief about client types.
#[derive(Debug, Clone)]
pub struct TypeBelief {
    servers: usize,
    clients: usize,
    levels: usize,
    counts: Vec<u32>,
    totals: Vec<u32>,
}

impl TypeBelief {
    pub fn new(servers: usize, clients: usize, levels: usize) -> Self {
        Self {
            servers,
            clients,
            levels,
            counts: vec![0; servers * clients * levels],
            totals: vec![0; servers * clients],
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn pair(&self, server: usize, client: usize) -> usize {
        debug_assert!(server < self.servers && client < self.clients);
        server * self.clients + client
    }

    pub fn record(&mut self, server: usize, client: usize, level: usize) {
        let p = self.pair(server, client);
        self.counts[p * self.levels + level] += 1;
        self.totals[p] += 1;
    }

    pub fn observations(&self, server: usize, client: usize) -> u32 {
        self.totals[self.pair(server, client)]
    }

    /// Estimated probability that `client` is of level `level` under
    /// `server`.
    pub fn probability(&self, server: usize, client: usize, level: usize) -> f64 {
        let p = self.pair(server, client);
        match self.totals[p] {
            0 => 1.0 / self.levels as f64,
            total => f64::from(self.counts[p * self.levels + level]) / f64::from(total),
        }
    }

    pub fn top_probability(&self, server: usize, client: usize) -> f64 {
        self.probability(server, client, self.levels - 1)
    }

    pub fn row(&self, server: usize, client: usize) -> Vec<f64> {
        let p = self.pair(server, client);
        frequencies(&self.counts[p * self.levels..(p + 1) * self.levels])
    }
}
