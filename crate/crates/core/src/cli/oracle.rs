//! Brute-force self-checks for the solvers and the contract.
//!
//! Every trial draws a fresh random instance from a seeded generator; a
//! failing trial is kept verbatim so it can be replayed.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::contract::{check_feasible, optimal_contract, verify_ic_ir, TypeGrid};
use crate::controller::{
    brute_force_subset, delegate_exhaustive, delegate_famus, delegation_objective, Candidate, ServerScore,
    SubsetObjective, SubsetSolver,
};
use crate::fairness::{drift_bound, lyapunov, update_queue, VirtualQueue};
use crate::rng::seeded;

/// Objective agreement required of the subset solver.
pub const SUBSET_TOLERANCE: f64 = 1e-9;
/// Slack allowed on the drift bound.
pub const DRIFT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleTrials {
    pub subset: usize,
    pub delegation: usize,
    pub contract: usize,
    pub drift: usize,
}

impl Default for OracleTrials {
    fn default() -> Self {
        Self {
            subset: 1000,
            delegation: 500,
            contract: 10_000,
            drift: 10_000,
        }
    }
}

impl OracleTrials {
    pub fn uniform(n: usize) -> Self {
        Self {
            subset: n,
            delegation: n,
            contract: n,
            drift: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// The first failing instance with both answers, for replay.
    pub first_failure: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub seed: u64,
    pub checks: Vec<OracleCheck>,
    pub warnings: Vec<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }
}

struct Tally {
    check: OracleCheck,
}

impl Tally {
    fn new(name: &str, trials: usize) -> Self {
        Self {
            check: OracleCheck {
                name: name.into(),
                trials,
                failures: 0,
                first_failure: None,
            },
        }
    }

    fn fail(&mut self, instance: impl FnOnce() -> Value) {
        self.check.failures += 1;
        if self.check.first_failure.is_none() {
            self.check.first_failure = Some(instance());
        }
    }
}

/// A random subset instance: up to `max_candidates` clients with random
/// top-type probabilities (some exactly zero), data sizes, top type, `V`
/// and weights.
pub fn random_subset_instance<R: Rng>(rng: &mut R, max_candidates: usize) -> (SubsetObjective, Vec<Candidate>) {
    let v = [0.0, 0.1, 1.0, 10.0, 50.0, 1e3][rng.random_range(0..6)] * rng.random_range(0.5..2.0);
    let mu1 = rng.random_range(0.0..1.0);
    let mu2 = 1.0 - mu1;
    let top = rng.random_range(0.5..200.0);
    let periods = [1.0, 2.0, 5.0, 10.0, 20.0][rng.random_range(0..5)];
    let obj = SubsetObjective {
        scale: v * mu1,
        periods,
        floor: 1.0 / periods,
        al_max: 1.0 + 1.0 / periods,
    };
    let count = rng.random_range(0..=max_candidates);
    let candidates = (0..count)
        .map(|client| {
            let pi = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) };
            let d = rng.random_range(0.01..300.0);
            Candidate {
                client,
                weight: pi * d,
                price: v * mu2 * pi / top,
            }
        })
        .collect();
    (obj, candidates)
}

/// Solver objective against the `2^|C|` minimum.
pub fn check_subset_solver<S: SubsetSolver + ?Sized>(solver: &S, trials: usize, seed: u64) -> OracleCheck {
    let mut rng = seeded(seed ^ 0x5b5e7);
    let mut tally = Tally::new("subset-solver", trials);
    for trial in 0..trials {
        let (obj, cands) = random_subset_instance(&mut rng, 12);
        let got = solver.solve(&obj, &cands);
        let want = brute_force_subset(&obj, &cands);
        let recomputed = obj.evaluate(&cands, &got.chosen);
        let scale = want.objective.abs().max(1.0);
        let valid = got.chosen.iter().all(|&i| i < cands.len());
        if !valid
            || (recomputed - want.objective).abs() > SUBSET_TOLERANCE * scale
            || (got.objective - recomputed).abs() > SUBSET_TOLERANCE * scale
        {
            tally.fail(|| {
                json!({
                    "trial": trial,
                    "objective": obj,
                    "candidates": cands,
                    "solver": got,
                    "brute_force": want,
                })
            });
        }
    }
    tally.check
}

/// `delegate_famus` against exhaustive search over server subsets.
pub fn check_delegation(trials: usize, seed: u64) -> OracleCheck {
    let mut rng = seeded(seed ^ 0xde1e);
    let mut tally = Tally::new("delegation", trials);
    for trial in 0..trials {
        let n = rng.random_range(1..=10);
        let k = rng.random_range(0..=n);
        let force = rng.random_bool(0.5);
        let scores: Vec<ServerScore> = (0..n)
            .map(|_| ServerScore {
                if_delegated: rng.random_range(-50.0..50.0),
                if_idle: rng.random_range(-50.0..50.0),
                queue: rng.random_range(0.0..20.0),
            })
            .collect();
        let action = delegate_famus(&scores, k, force);
        let got = delegation_objective(&scores, &action.delegated_servers());
        let (best, want) = delegate_exhaustive(&scores, k, force);
        if got != want {
            tally.fail(|| {
                json!({
                    "trial": trial,
                    "tasks": k,
                    "force_assign_all": force,
                    "scores": scores,
                    "famus": action.delegated_servers(),
                    "famus_objective": got,
                    "exhaustive": best,
                    "exhaustive_objective": want,
                })
            });
        }
    }
    tally.check
}

/// A random valid grid with 1 to 100 levels; about one in four grids
/// repeats some values.
pub fn random_grid<R: Rng>(rng: &mut R) -> TypeGrid {
    let count = rng.random_range(1..=100);
    let hi = rng.random_range(1e-3..1e3);
    let mut levels: Vec<f64> = (0..count).map(|_| rng.random_range(hi * 1e-3..=hi)).collect();
    if rng.random_bool(0.25) {
        for i in 1..count {
            if rng.random_bool(0.3) {
                levels[i] = levels[i - 1];
            }
        }
    }
    levels.sort_by(f64::total_cmp);
    TypeGrid::new(levels).expect("positive sorted levels")
}

/// The optimal menu against the structural checker and the exhaustive
/// IC/IR verifier.
pub fn check_contract(trials: usize, seed: u64) -> OracleCheck {
    let mut rng = seeded(seed ^ 0xc0de);
    let mut tally = Tally::new("contract", trials);
    for trial in 0..trials {
        let grid = random_grid(&mut rng);
        let menu = optimal_contract(&grid);
        let structural = check_feasible(&menu, &grid);
        let exhaustive = verify_ic_ir(&menu, &grid);
        if structural.is_err() || !exhaustive.passed() {
            tally.fail(|| {
                json!({
                    "trial": trial,
                    "grid": grid.levels(),
                    "menu": menu,
                    "structural": structural.err().map(|v| v.to_string()),
                    "ic_ir": exhaustive,
                })
            });
        }
    }
    tally.check
}

/// One queue update from random backlogs, reputations and delegations
/// against the drift bound.
pub fn check_drift(trials: usize, seed: u64) -> OracleCheck {
    let mut rng = seeded(seed ^ 0xd21f7);
    let mut tally = Tally::new("drift-bound", trials);
    for trial in 0..trials {
        let n = rng.random_range(1..=20);
        let eps = rng.random_range(0.0..=1.0);
        let backlog: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..100.0) })
            .collect();
        let reputation: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        let delegated: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let q = VirtualQueue {
                    backlog: backlog[i],
                    discount: eps,
                };
                update_queue(q, reputation[i], delegated[i]).backlog
            })
            .collect();
        let arrivals: Vec<f64> = reputation.iter().map(|g| eps * g).collect();
        let change = lyapunov(&next) - lyapunov(&backlog);
        let bound = drift_bound(&backlog, &arrivals, &delegated);
        if bound - change < -DRIFT_SLACK {
            tally.fail(|| {
                json!({
                    "trial": trial,
                    "epsilon": eps,
                    "backlog": backlog,
                    "reputation": reputation,
                    "delegated": delegated,
                    "change": change,
                    "bound": bound,
                })
            });
        }
    }
    tally.check
}

/// All four checks, with `solver` standing in for the subset solver.
pub fn run_oracles<S: SubsetSolver + ?Sized>(solver: &S, trials: OracleTrials, seed: u64) -> OracleReport {
    let checks = vec![
        check_subset_solver(solver, trials.subset, seed),
        check_delegation(trials.delegation, seed),
        check_contract(trials.contract, seed),
        check_drift(trials.drift, seed),
    ];
    let warnings = checks
        .iter()
        .filter(|c| c.trials == 0)
        .map(|c| format!("{}: zero trials, passes vacuously", c.name))
        .collect();
    OracleReport { seed, checks, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{BranchAndBound, Selection};

    /// Takes the best single candidate and stops there.
    struct OneBest;

    impl SubsetSolver for OneBest {
        fn solve(&self, obj: &SubsetObjective, candidates: &[Candidate]) -> Selection {
            let mut best = Selection::empty(obj);
            for i in 0..candidates.len() {
                let v = obj.evaluate(candidates, &[i]);
                if v < best.objective {
                    best = Selection {
                        chosen: vec![i],
                        mass: candidates[i].weight,
                        price: candidates[i].price,
                        objective: v,
                    };
                }
            }
            best
        }
    }

    #[test]
    fn real_solvers_pass() {
        let report = run_oracles(&BranchAndBound, OracleTrials::uniform(300), 11);
        assert!(report.passed(), "{report:?}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn faulty_solver_is_caught_with_a_replayable_instance() {
        let report = run_oracles(&OneBest, OracleTrials::uniform(300), 11);
        assert!(!report.passed());
        let check = &report.checks[0];
        assert!(check.failures > 0);
        let inst = check.first_failure.as_ref().unwrap();
        let obj: SubsetObjective = serde_json::from_value(inst["objective"].clone()).unwrap();
        let cands: Vec<Candidate> = serde_json::from_value(inst["candidates"].clone()).unwrap();
        let again = OneBest.solve(&obj, &cands);
        assert!(again.objective > brute_force_subset(&obj, &cands).objective + SUBSET_TOLERANCE);
        // the other checks do not depend on the solver
        assert!(report.checks[1..].iter().all(|c| c.failures == 0));
    }

    #[test]
    fn zero_trials_pass_with_a_warning() {
        let report = run_oracles(&OneBest, OracleTrials::uniform(0), 1);
        assert!(report.passed());
        assert_eq!(report.warnings.len(), 4);
    }
}
