//! Max flow, a fractional b-matching, and a min-cost client assignment.

use cfl_rounding::flow::{max_b_matching, max_flow, min_cost_assignment, FlowNetwork};
use cfl_rounding::instances::CflInstance;

fn main() -> cfl_rounding::Result<()> {
    let mut net = FlowNetwork::new(4);
    net.add_arc(0, 1, 3.0, 0.0);
    net.add_arc(0, 2, 2.0, 0.0);
    net.add_arc(1, 2, 1.0, 0.0);
    net.add_arc(1, 3, 2.0, 0.0);
    net.add_arc(2, 3, 3.0, 0.0);
    let mf = max_flow(&net, 0, 3);
    println!("max flow {} (source side {:?})", mf.value, mf.source_side);

    // two facilities with capacity 1 each, three clients that may use either
    let cap = vec![vec![1.0, 1.0, 0.5], vec![0.0, 1.0, 1.0]];
    let m = max_b_matching(&cap, &[1.0, 1.0], 3);
    println!("b-matching value {} with h = {:?}", m.value, m.h);

    let inst = CflInstance::from_points(
        &[((0.0, 0.0), 1.0, 2), ((4.0, 0.0), 1.0, 2)],
        &[(0.5, 0.0), (1.0, 0.0), (1.5, 0.0), (3.5, 0.0)],
    );
    let sol = min_cost_assignment(&inst, &[0, 1])?;
    println!("assignment {:?}, cost {:.3}", sol.assign, sol.cost(&inst));
    Ok(())
}
