//! The flow relaxation rejects a candidate with too little opening and
//! returns a hyperplane that every integral solution satisfies.

use cfl_rounding::instances::{CflInstance, FractionalSolution};
use cfl_rounding::mfn::{self, MfnOutcome, PartialAssignment};

fn main() -> cfl_rounding::Result<()> {
    let inst = CflInstance::from_points(&[((0.0, 0.0), 1.0, 1)], &[(1.0, 0.0)]);
    let weak = FractionalSolution { y: vec![0.4], x: vec![vec![1.0]] };
    let net = mfn::build(&inst, &weak, &PartialAssignment::zeros(1, 1))?;
    match mfn::feasible(&net)? {
        MfnOutcome::Cut(cut) => {
            println!("cut {:?} ≥ {}", cut.coeffs, cut.rhs);
            println!("violation by the candidate: {:.3}", cut.violation(&mfn::params(&weak)));
            let integral = FractionalSolution { y: vec![1.0], x: vec![vec![1.0]] };
            println!("violation by y = x = 1: {:.3}", cut.violation(&mfn::params(&integral)));
        }
        MfnOutcome::Feasible(_) => unreachable!("y = 0.4 cannot carry a full client"),
    }

    let full = FractionalSolution { y: vec![1.0], x: vec![vec![1.0]] };
    let net = mfn::build(&inst, &full, &PartialAssignment::zeros(1, 1))?;
    if let MfnOutcome::Feasible(cf) = mfn::feasible(&net)? {
        println!("integral candidate routes with {} paths", cf.paths.len());
    }
    Ok(())
}
