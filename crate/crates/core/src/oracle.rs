//! Exhaustive CFL solver and solution verifier for small instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::min_cost_assignment;
use crate::instances::{CflInstance, IntegralSolution};

/// Largest facility count accepted by [`exact_opt`].
pub const MAX_FACILITIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub opt_cost: f64,
    pub opt_solution: IntegralSolution,
    pub subsets_examined: u64,
}

/// Facility subsets in Gray-code order; the capacity sum is updated one
/// facility at a time and subsets that cannot cover all clients are skipped.
pub fn exact_opt(inst: &CflInstance) -> Result<OracleResult> {
    let n_f = inst.n_facilities();
    if n_f > MAX_FACILITIES {
        return Err(Error::Guard(format!("{n_f} facilities (limit {MAX_FACILITIES})")));
    }
    let need = inst.n_clients as u64;
    let total = 1u64 << n_f;
    let chunks = 64u64.min(total);
    let per = total.div_ceil(chunks);
    type Best = Option<(f64, u64, IntegralSolution)>;
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(u64, Best)> {
            let (lo, hi) = (c * per, ((c + 1) * per).min(total));
            let mut best: Best = None;
            let mut examined = 0;
            if lo >= hi {
                return Ok((0, None));
            }
            let mut mask = lo ^ (lo >> 1);
            let mut cap: u64 = (0..n_f).filter(|&i| mask >> i & 1 == 1).map(|i| inst.facilities[i].capacity).sum();
            for k in lo..hi {
                if k > lo {
                    let bit = k.trailing_zeros() as usize;
                    mask ^= 1 << bit;
                    let u = inst.facilities[bit].capacity;
                    if mask >> bit & 1 == 1 {
                        cap += u;
                    } else {
                        cap -= u;
                    }
                }
                if cap < need {
                    continue;
                }
                examined += 1;
                let open: Vec<usize> = (0..n_f).filter(|&i| mask >> i & 1 == 1).collect();
                let sol = min_cost_assignment(inst, &open)?;
                let cost = sol.cost(inst);
                if best.as_ref().is_none_or(|b| (cost, mask) < (b.0, b.1)) {
                    best = Some((cost, mask, sol));
                }
            }
            Ok((examined, best))
        })
        .collect::<Result<Vec<_>>>()?;
    let examined = parts.iter().map(|p| p.0).sum();
    // Ties go to the smallest mask, independent of scheduling.
    let winner = parts
        .into_iter()
        .filter_map(|p| p.1)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or_else(|| Error::Infeasible("no facility subset covers all clients".into()))?;
    Ok(OracleResult { opt_cost: winner.0, opt_solution: winner.2, subsets_examined: examined })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub feasible: bool,
    pub cost: f64,
    pub violations: Vec<String>,
}

/// Every client assigned to an open facility, capacities respected.
pub fn verify(inst: &CflInstance, sol: &IntegralSolution) -> Verification {
    let n_f = inst.n_facilities();
    let mut violations = Vec::new();
    let mut open = vec![false; n_f];
    for &i in &sol.open {
        if i >= n_f {
            violations.push(format!("open facility {i} does not exist"));
        } else if open[i] {
            violations.push(format!("facility {i} opened twice"));
        } else {
            open[i] = true;
        }
    }
    if sol.assign.len() != inst.n_clients {
        violations.push(format!(
            "{} assignments for {} clients",
            sol.assign.len(),
            inst.n_clients
        ));
    }
    let mut load = vec![0u64; n_f];
    for (j, &i) in sol.assign.iter().enumerate() {
        if i >= n_f {
            violations.push(format!("client {j} assigned to missing facility {i}"));
            continue;
        }
        if !open[i] {
            violations.push(format!("client {j} assigned to closed facility {i}"));
        }
        load[i] += 1;
    }
    for (i, &l) in load.iter().enumerate() {
        if l > inst.facilities[i].capacity {
            violations.push(format!(
                "facility {i} overloaded: {l} > {}",
                inst.facilities[i].capacity
            ));
        }
    }
    let cost = if violations.iter().any(|v| v.contains("missing") || v.contains("exist")) {
        f64::NAN
    } else {
        sol.cost(inst)
    };
    Verification { feasible: violations.is_empty(), cost, violations }
}
