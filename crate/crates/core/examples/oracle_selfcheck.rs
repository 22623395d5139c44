//! Runs the brute-force self-checks twice: once with the exact subset
//! solver and once with a greedy stand-in that the checks should catch.
//!
//!     cargo run --release --example oracle_selfcheck

use famus::cli::oracle::{run_oracles, OracleTrials};
use famus::controller::{BranchAndBound, Candidate, Selection, SubsetObjective, SubsetSolver};

/// Adds candidates by mass per unit price while that helps.
struct Greedy;

impl SubsetSolver for Greedy {
    fn solve(&self, obj: &SubsetObjective, candidates: &[Candidate]) -> Selection {
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| {
            let r = |c: &Candidate| c.weight / c.price.max(f64::MIN_POSITIVE);
            r(&candidates[b]).total_cmp(&r(&candidates[a]))
        });
        let mut best = Selection::empty(obj);
        let mut chosen = Vec::new();
        for i in order {
            chosen.push(i);
            let v = obj.evaluate(candidates, &chosen);
            if v >= best.objective {
                chosen.pop();
                continue;
            }
            best.objective = v;
            best.mass += candidates[i].weight;
            best.price += candidates[i].price;
        }
        chosen.sort_unstable();
        best.chosen = chosen;
        best
    }
}

fn main() {
    let trials = OracleTrials::uniform(500);
    for (name, report) in [
        ("branch and bound", run_oracles(&BranchAndBound, trials, 0)),
        ("greedy", run_oracles(&Greedy, trials, 0)),
    ] {
        println!("{name}: {}", if report.passed() { "pass" } else { "FAIL" });
        for c in &report.checks {
            println!("  {:<14} {:>3} of {} trials failed", c.name, c.failures, c.trials);
        }
        if let Some(first) = report.checks[0].first_failure.as_ref() {
            println!("  first subset failure: solver {} vs brute force {}", first["solver"]["objective"], first["brute_force"]["objective"]);
        }
    }
}
