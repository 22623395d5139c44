//! Builds a type grid from sampled client types, derives the optimal
//! menu, and shows every level's payoff for every item. A hand-made menu
//! that overpays a low type is rejected by both checkers.
//!
//!     cargo run --example contract_menu

use famus::contract::{
    best_response, check_feasible, optimal_contract, payoff, verify_ic_ir, ContractItem, TypeGrid,
};
use famus::rng::seeded;
use rand::Rng;

fn main() -> famus::Result<()> {
    let mut rng = seeded(3);
    let types: Vec<f64> = (0..500).map(|_| 1.0 / rng.random_range(0.5..2.5)).collect();
    let grid = TypeGrid::from_samples(&types, 6, 6.0 / 7.0)?;
    let menu = optimal_contract(&grid);

    println!("levels: {:.3?}", grid.levels());
    println!("menu:   {:?}\n", menu.items);
    println!("payoff of level i (row) taking item j (column)");
    for i in 0..grid.len() {
        let row: Vec<String> = menu.items.iter().map(|it| format!("{:>7.3}", payoff(it, grid.value(i)))).collect();
        println!("  {i}: {}   picks {:?}", row.join(" "), best_response(&menu, &grid, i));
    }
    println!("\nstructural check: {:?}", check_feasible(&menu, &grid));
    println!("IC/IR check:      {:?}", verify_ic_ir(&menu, &grid));

    let mut bad = menu.clone();
    bad.items[0] = ContractItem {
        participate: true,
        reward: 2.0,
    };
    println!("\noverpaying level 0:");
    match check_feasible(&bad, &grid) {
        Ok(()) => println!("  structural check: accepted"),
        Err(v) => println!("  structural check: {v}"),
    }
    println!("  IC/IR check:      {:?}", verify_ic_ir(&bad, &grid));
    Ok(())
}
