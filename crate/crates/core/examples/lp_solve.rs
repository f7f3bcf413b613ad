//! Solve a small LP, read its duals, and certify an infeasible one.

use cfl_rounding::lp::{self, LinearProgram, LpStatus, Relation, Sense};

fn main() -> cfl_rounding::Result<()> {
    // min 2a + 3b  s.t.  a + b ≥ 4,  a − b ≤ 1,  a, b ≥ 0
    let mut p = LinearProgram::new(Sense::Minimize);
    let a = p.add_var(0.0, f64::INFINITY, 2.0);
    let b = p.add_var(0.0, f64::INFINITY, 3.0);
    p.add_row(vec![(a, 1.0), (b, 1.0)], Relation::Ge, 4.0);
    p.add_row(vec![(a, 1.0), (b, -1.0)], Relation::Le, 1.0);
    let s = lp::solve(&p)?;
    println!("status {:?}, objective {}, x = {:?}", s.status, s.objective, s.primal);
    println!("duals {:?}", s.duals);

    let ex = lp::solve_exact(&p)?;
    println!("exact objective {}", ex.objective);

    // a + b ≥ 3 with a, b ∈ [0, 1] has no solution
    let mut q = LinearProgram::new(Sense::Minimize);
    let a = q.add_var(0.0, 1.0, 0.0);
    let b = q.add_var(0.0, 1.0, 0.0);
    q.add_row(vec![(a, 1.0), (b, 1.0)], Relation::Ge, 3.0);
    let s = lp::solve(&q)?;
    assert_eq!(s.status, LpStatus::Infeasible);
    println!("infeasible; Farkas multipliers {:?}", s.farkas.unwrap_or_default());
    Ok(())
}
