//! Solve a general CFL instance with the cutting-plane round-or-separate
//! driver and compare against the exhaustive optimum.

use cfl_rounding::cfl::{alpha_star, ratio_bound, solve_cfl, RoundingParams};
use cfl_rounding::instances::{gen_euclidean, GenParams};
use cfl_rounding::oracle::exact_opt;

fn main() -> cfl_rounding::Result<()> {
    let inst = gen_euclidean(&GenParams::new(5, 8, 7))?;
    let run = solve_cfl(&inst, &RoundingParams::default())?;
    let opt = exact_opt(&inst)?.opt_cost;
    println!("open {:?}", run.solution.open);
    println!("cost {:.4}, master bound {:.4}, OPT {:.4}", run.cost, run.lower_bound, opt);
    println!(
        "ratio to bound {:.3} (guarantee {:.4}), cuts {}, rounding iterations {}",
        run.ratio,
        ratio_bound(alpha_star()),
        run.cuts.len(),
        run.rounding.iterative.iterations.len()
    );
    for (name, ok) in run.checks.flags() {
        println!("  {name}: {}", if ok { "ok" } else { "FAILED" });
    }
    Ok(())
}
