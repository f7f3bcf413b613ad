//! Exhaustive optimum for a small instance, and verification of a solution.

use cfl_rounding::instances::{gen_euclidean, GenParams, IntegralSolution};
use cfl_rounding::oracle::{exact_opt, verify};

fn main() -> cfl_rounding::Result<()> {
    let inst = gen_euclidean(&GenParams::new(8, 10, 3))?;
    let r = exact_opt(&inst)?;
    println!("OPT {:.4} opening {:?} ({} subsets)", r.opt_cost, r.opt_solution.open, r.subsets_examined);
    let v = verify(&inst, &r.opt_solution);
    println!("verified: feasible {}, cost {:.4}", v.feasible, v.cost);

    let bad = IntegralSolution { open: vec![0], assign: vec![0; inst.n_clients] };
    println!("everything on facility 0: {:?}", verify(&inst, &bad).violations);
    Ok(())
}
