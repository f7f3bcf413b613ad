//! Unit opening costs: natural LP, clustering with outliers, and the small
//! assignment LP over outlier clusters.

use cfl_rounding::cflcfc::solve_cflcfc;
use cfl_rounding::instances::{gen_euclidean, GenParams};
use cfl_rounding::oracle::exact_opt;

fn main() -> cfl_rounding::Result<()> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let inst = gen_euclidean(&GenParams::new(6, 9, seed).cardinality(true))?;
    let run = solve_cflcfc(&inst)?;
    let opt = exact_opt(&inst)?.opt_cost;
    println!("big {:?}, small {:?}", run.classes.big, run.classes.small);
    println!(
        "phase one: {} clusters ({} rounded facilities), {} outlier clients",
        run.phase1.iterations,
        run.phase1.regular_facilities().len(),
        run.phase1.outliers.len()
    );
    println!(
        "phase two: |G| = {}, fractional {} (exact arithmetic: {})",
        run.phase2.g_facilities.len(),
        run.phase2.fractional.len(),
        run.phase2.exact
    );
    println!("open {:?}", run.opened);
    println!("cost {:.4}, LP {:.4}, OPT {:.4}, ratio {:.3}", run.cost, run.lower_bound, opt, run.ratio);
    assert!(run.checks.all_ok(), "{:?}", run.checks.failures());
    Ok(())
}
