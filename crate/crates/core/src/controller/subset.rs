//! Per-server client subset selection.
//!
//! Minimises `scale * AL(sum w) + sum price` over subsets of candidates,
//! where `AL(W) = 1/sqrt(periods * W) + floor` for `W > 0` and
//! `AL(0) = al_max`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub client: usize,
    /// Expected data mass `pi * d`.
    pub weight: f64,
    /// Expected payment term, already scaled by `V * mu2`.
    pub price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetObjective {
    /// Multiplier on the accuracy loss, `V * mu1`.
    pub scale: f64,
    /// Slots per task period, `tau / slot_len`.
    pub periods: f64,
    /// Accuracy-loss floor `slot_len / tau`.
    pub floor: f64,
    /// Accuracy loss charged at zero mass.
    pub al_max: f64,
}

impl SubsetObjective {
    pub fn accuracy_loss(&self, mass: f64) -> f64 {
        if mass > 0.0 {
            1.0 / (self.periods * mass).sqrt() + self.floor
        } else {
            self.al_max
        }
    }

    pub fn value(&self, mass: f64, price: f64) -> f64 {
        self.scale * self.accuracy_loss(mass) + price
    }

    pub fn evaluate(&self, candidates: &[Candidate], chosen: &[usize]) -> f64 {
        let (mass, price) = totals(candidates, chosen);
        self.value(mass, price)
    }
}

fn totals(candidates: &[Candidate], chosen: &[usize]) -> (f64, f64) {
    chosen.iter().fold((0.0, 0.0), |(w, p), &i| {
        (w + candidates[i].weight, p + candidates[i].price)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Indices into the candidate slice, ascending.
    pub chosen: Vec<usize>,
    pub mass: f64,
    pub price: f64,
    pub objective: f64,
}

impl Selection {
    fn from_indices(obj: &SubsetObjective, candidates: &[Candidate], mut chosen: Vec<usize>) -> Self {
        chosen.sort_unstable();
        let (mass, price) = totals(candidates, &chosen);
        Self {
            chosen,
            mass,
            price,
            objective: obj.value(mass, price),
        }
    }

    pub fn empty(obj: &SubsetObjective) -> Self {
        Self {
            chosen: Vec::new(),
            mass: 0.0,
            price: 0.0,
            objective: obj.value(0.0, 0.0),
        }
    }
}

/// Anything that picks a subset for an objective. The simulator uses
/// [`solve_client_subset`]; the trait lets the self-check harness run
/// against substitute solvers.
pub trait SubsetSolver {
    fn solve(&self, obj: &SubsetObjective, candidates: &[Candidate]) -> Selection;
}

pub struct BranchAndBound;

impl SubsetSolver for BranchAndBound {
    fn solve(&self, obj: &SubsetObjective, candidates: &[Candidate]) -> Selection {
        solve_client_subset(obj, candidates)
    }
}

/// Exact minimiser by branch and bound.
///
/// Candidates with zero weight never help and are dropped; the rest are
/// visited in ascending price-per-weight order (descending `d * gamma` for
/// contract prices). The bound at each node is the continuous relaxation,
/// which for this convex objective is filled greedily in that same order.
/// The incumbent starts from the best prefix of the sorted order.
pub fn solve_client_subset(obj: &SubsetObjective, candidates: &[Candidate]) -> Selection {
    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].weight > 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&candidates[a], &candidates[b]);
        (ca.price / ca.weight)
            .total_cmp(&(cb.price / cb.weight))
            .then(a.cmp(&b))
    });
    let items: Vec<(f64, f64)> = order
        .iter()
        .map(|&i| (candidates[i].weight, candidates[i].price))
        .collect();

    let mut search = Search {
        obj,
        items: &items,
        best_value: obj.value(0.0, 0.0),
        best: Vec::new(),
        stack: Vec::new(),
    };
    // prefix incumbent
    let (mut w, mut p) = (0.0, 0.0);
    for (k, &(wi, pi)) in items.iter().enumerate() {
        w += wi;
        p += pi;
        let v = obj.value(w, p);
        if v < search.best_value {
            search.best_value = v;
            search.best = (0..=k).collect();
        }
    }
    search.descend(0, 0.0, 0.0);

    let chosen = search.best.iter().map(|&k| order[k]).collect();
    Selection::from_indices(obj, candidates, chosen)
}

struct Search<'a> {
    obj: &'a SubsetObjective,
    items: &'a [(f64, f64)],
    best_value: f64,
    best: Vec<usize>,
    stack: Vec<usize>,
}

impl Search<'_> {
    fn descend(&mut self, k: usize, mass: f64, price: f64) {
        let here = self.obj.value(mass, price);
        if here < self.best_value {
            self.best_value = here;
            self.best = self.stack.clone();
        }
        // only strict improvements matter, so equal bounds are pruned too
        let slack = 1e-12 * self.best_value.abs().max(1.0);
        if k == self.items.len() || self.lower_bound(k, mass, price) >= self.best_value - slack {
            return;
        }
        let (w, p) = self.items[k];
        self.stack.push(k);
        self.descend(k + 1, mass + w, price + p);
        self.stack.pop();
        self.descend(k + 1, mass, price);
    }

    /// Lower bound on every completion of the current node using items
    /// `k..`, taken fractionally.
    fn lower_bound(&self, k: usize, mass: f64, price: f64) -> f64 {
        let obj = self.obj;
        // with no mass yet, stopping here is charged the sentinel, which the
        // relaxation below does not see
        let stop_here = obj.value(mass, price);
        let c = 0.5 * obj.scale / obj.periods.sqrt();
        let (mut w, mut p) = (mass, price);
        for &(wi, pi) in &self.items[k..] {
            let ratio = pi / wi;
            // marginal value of mass at w is c * w^-1.5
            if w > 0.0 && c * w.powf(-1.5) <= ratio {
                break;
            }
            let target = if ratio > 0.0 {
                (c / ratio).powf(2.0 / 3.0)
            } else {
                f64::INFINITY
            };
            if target >= w + wi {
                w += wi;
                p += pi;
            } else {
                p += ratio * (target - w);
                w = target;
                break;
            }
        }
        let relaxed = if w > 0.0 {
            obj.scale * (1.0 / (obj.periods * w).sqrt() + obj.floor) + p
        } else {
            stop_here
        };
        relaxed.min(stop_here)
    }
}

/// Exhaustive `2^n` search, ties to the lexicographically first mask.
pub fn brute_force_subset(obj: &SubsetObjective, candidates: &[Candidate]) -> Selection {
    assert!(candidates.len() <= 24, "brute force limited to 24 candidates");
    let n = candidates.len();
    let mut best_mask = 0u32;
    let mut best_value = obj.value(0.0, 0.0);
    for mask in 1u32..(1 << n) {
        let (mut w, mut p) = (0.0, 0.0);
        for (i, c) in candidates.iter().enumerate() {
            if mask >> i & 1 == 1 {
                w += c.weight;
                p += c.price;
            }
        }
        let v = obj.value(w, p);
        if v < best_value {
            best_value = v;
            best_mask = mask;
        }
    }
    let chosen = (0..n).filter(|i| best_mask >> i & 1 == 1).collect();
    Selection::from_indices(obj, candidates, chosen)
}
