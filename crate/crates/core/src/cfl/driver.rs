//! Round-or-separate step and the cutting-plane driver around it.

use serde::{Deserialize, Serialize};

use super::iterative::{iterative_round, tuple_lp_witness, tuple_lp, IterativeResult, ParamTuple};
use super::sparse::{
    build_g, build_sparse_flow, check_local_isolation, check_tight_saturated, pair_flows,
    GConstruction, SparseFlow,
};
use super::{classify, ratio_bound, Classification, RoundingParams};
use crate::error::{Error, Result};
use crate::flow::min_cost_assignment;
use crate::instances::{self, CflInstance, FractionalSolution, IntegralSolution};
use crate::invariants::CheckLog;
use crate::lp::{self, Hyperplane, LinearProgram, LpStatus, Relation, Sense};
use crate::mfn::{self, x_param, y_param, MfnOutcome};

/// A successful rounding with everything needed to replay its checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rounding {
    pub solution: IntegralSolution,
    pub cost: f64,
    /// The rounded candidate and its cost.
    pub candidate: FractionalSolution,
    pub candidate_cost: f64,
    pub classification: Classification,
    pub g: GConstruction,
    pub sparse: SparseFlow,
    pub start: ParamTuple,
    pub iterative: IterativeResult,
    /// Combined fractional assignment over the opened facilities.
    pub x3: Vec<Vec<f64>>,
    pub checks: CheckLog,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoundOutcome {
    Rounded(Box<Rounding>),
    Cut(Hyperplane),
}

pub fn round_or_separate(
    inst: &CflInstance,
    cand: &FractionalSolution,
    params: &RoundingParams,
) -> Result<RoundOutcome> {
    params.validate()?;
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    if cand.y.len() != n_f || cand.x.len() != n_f || cand.x.iter().any(|r| r.len() != n_d) {
        return Err(Error::Contract("candidate shape does not match instance".into()));
    }
    let bad = cand.range_violations(1e-9);
    if !bad.is_empty() {
        return Err(Error::Contract(format!("candidate outside [0,1]: {}", bad.join("; "))));
    }
    let (alpha, ctol) = (params.alpha, params.check_tol);
    let caps: Vec<f64> = (0..n_f).map(|i| inst.capacity(i)).collect();
    let class = classify(cand, &caps, alpha);
    let mut log = CheckLog::new();
    let gc = build_g(inst, cand, &class, alpha, params.tol);
    check_tight_saturated(inst, &gc, &mut log, ctol);

    let mut lifted = cand.clone();
    for &i in &class.big {
        lifted.y[i] = 1.0;
    }
    let net = mfn::build(inst, &lifted, &gc.g)?;
    let cf = match mfn::feasible(&net)? {
        MfnOutcome::Cut(cut) => return Ok(RoundOutcome::Cut(cut)),
        MfnOutcome::Feasible(cf) => cf,
    };
    for v in mfn::check_constraints(&net, &cf, ctol) {
        log.flag("flow_constraints", false, || v);
    }
    log.flag("flow_constraints", true, String::new);
    check_local_isolation(&net, &cf, &gc, &mut log, ctol);
    let sparse = build_sparse_flow(&net, &cf, &gc, &class, alpha);
    for &i in &class.big {
        log.le("sparse_big_load", sparse.load(i), (1.0 - alpha) * inst.capacity(i), ctol, || {
            format!("facility {i}")
        });
    }

    let pf = pair_flows(n_f, n_d, &cf);
    let r: Vec<f64> = (0..n_d).map(|j| gc.g.demand(j)).collect();
    let r_prime: Vec<f64> = (0..n_d).map(|j| class.small.iter().map(|&i| pf[i][j]).sum()).collect();
    let mut start = ParamTuple {
        facilities: class.small.clone(),
        clients: (0..n_d).collect(),
        r_prime,
        r,
    };
    start.prune(alpha, params.tol);
    let witness = tuple_lp_witness(&start, &pf, &cand.y, alpha);
    let viol = lp::primal_violation(&tuple_lp(inst, &start, alpha), &witness);
    log.le("initial_witness_feasible", viol, 0.0, ctol, || "tuple LP witness".into());

    let iterative = iterative_round(inst, &start, params, &mut log)?;
    for j in 0..n_d {
        let got: f64 = iterative.rounded.iter().map(|&i| iterative.x2[i][j]).sum();
        let need = if start.clients.contains(&j) { start.r_prime[j] - alpha * start.r[j] } else { 0.0 };
        log.le("mostly_assigned", need, got, ctol, || format!("client {j}"));
    }

    let mut open: Vec<usize> = class.big.iter().chain(&iterative.rounded).copied().collect();
    open.sort_unstable();
    let mut x3 = vec![vec![0.0; n_d]; n_f];
    for &i in &class.big {
        x3[i] = sparse.x[i].clone();
    }
    for &i in &iterative.rounded {
        x3[i] = iterative.x2[i].clone();
    }
    for j in 0..n_d {
        let cover: f64 = open.iter().map(|&i| x3[i][j]).sum();
        log.le("coverage", 1.0 - alpha, cover, ctol, || format!("client {j}"));
    }
    for &i in &open {
        let load: f64 = x3[i].iter().sum::<f64>() / (1.0 - alpha);
        log.le("scaled_capacity", load, inst.capacity(i), ctol, || format!("facility {i}"));
    }

    let solution = min_cost_assignment(inst, &open).map_err(|e| match e {
        Error::Infeasible(m) => Error::InvariantViolation(format!("final assignment: {m}")),
        other => other,
    })?;
    let cost = solution.cost(inst);
    let candidate_cost = instances::cost(inst, cand);
    let bound = ratio_bound(alpha) * candidate_cost;
    log.le("candidate_ratio", cost, bound, 1e-9 * inst.scale(), || {
        format!("cost {cost} vs bound {bound}")
    });
    Ok(RoundOutcome::Rounded(Box::new(Rounding {
        solution,
        cost,
        candidate: cand.clone(),
        candidate_cost,
        classification: class,
        g: gc,
        sparse,
        start,
        iterative,
        x3,
        checks: log,
    })))
}

/// Master LP over `(x, y)` in the parameter layout of [`mfn`], seeded with
/// the natural constraints.
pub fn master_lp(inst: &CflInstance) -> LinearProgram {
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let mut lp = LinearProgram::new(Sense::Minimize);
    for i in 0..n_f {
        for j in 0..n_d {
            lp.add_var(0.0, 1.0, inst.dist(i, j));
        }
    }
    for i in 0..n_f {
        lp.add_var(0.0, 1.0, inst.open_cost(i));
    }
    for j in 0..n_d {
        lp.add_row((0..n_f).map(|i| (x_param(n_d, i, j), 1.0)).collect(), Relation::Ge, 1.0);
    }
    for i in 0..n_f {
        let y = y_param(n_f, n_d, i);
        let mut c: Vec<(usize, f64)> = (0..n_d).map(|j| (x_param(n_d, i, j), 1.0)).collect();
        c.push((y, -inst.capacity(i)));
        lp.add_row(c, Relation::Le, 0.0);
        for j in 0..n_d {
            lp.add_row(vec![(x_param(n_d, i, j), 1.0), (y, -1.0)], Relation::Le, 0.0);
        }
    }
    lp
}

pub fn add_cut(lp: &mut LinearProgram, cut: &Hyperplane) {
    let coeffs = cut.coeffs.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(k, &a)| (k, a)).collect();
    lp.add_row(coeffs, Relation::Ge, cut.rhs);
}

/// Candidate from a master solution; values within 1e-12 of a bound snap to it.
fn candidate(inst: &CflInstance, z: &[f64]) -> FractionalSolution {
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let snap = |v: f64| {
        if v <= 1e-12 {
            0.0
        } else if v >= 1.0 - 1e-12 {
            1.0
        } else {
            v
        }
    };
    FractionalSolution {
        y: (0..n_f).map(|i| snap(z[y_param(n_f, n_d, i)])).collect(),
        x: (0..n_f).map(|i| (0..n_d).map(|j| snap(z[x_param(n_d, i, j)])).collect()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub master_objective: f64,
    /// `rhs − coeffs·candidate`.
    pub violation: f64,
    pub nonzeros: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CflRun {
    pub solution: IntegralSolution,
    pub cost: f64,
    /// Final master optimum; at most OPT.
    pub lower_bound: f64,
    pub ratio: f64,
    pub cuts: Vec<CutRecord>,
    pub rounding: Rounding,
    pub checks: CheckLog,
}

pub fn ratio_of(cost: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        cost / bound
    } else if cost <= 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

pub fn solve_cfl(inst: &CflInstance, params: &RoundingParams) -> Result<CflRun> {
    params.validate()?;
    let bad = instances::validate(inst);
    if !bad.is_empty() {
        return Err(Error::InvalidInstance(bad.join("; ")));
    }
    if inst.total_capacity() < inst.n_clients as u64 {
        return Err(Error::Infeasible(format!(
            "total capacity {} below {} clients",
            inst.total_capacity(),
            inst.n_clients
        )));
    }
    let budget = params.max_cuts.unwrap_or(200 * (inst.n_facilities() + inst.n_clients));
    let mut master = master_lp(inst);
    let mut cuts = Vec::new();
    let mut checks = CheckLog::new();
    loop {
        let sol = lp::solve(&master)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(Error::Infeasible("master LP infeasible".into())),
            LpStatus::Unbounded => return Err(Error::SolverFailure("master LP unbounded".into())),
        }
        let cand = candidate(inst, &sol.primal);
        match round_or_separate(inst, &cand, params)? {
            RoundOutcome::Cut(cut) => {
                let violation = cut.violation(&mfn::params(&cand));
                checks.le("cut_violated", 1e-8, violation, 0.0, || {
                    format!("cut {} violated by {violation:e}", cuts.len())
                });
                cuts.push(CutRecord {
                    master_objective: sol.objective,
                    violation,
                    nonzeros: cut.coeffs.iter().filter(|a| **a != 0.0).count(),
                });
                if cuts.len() > budget {
                    return Err(Error::Budget { cuts: cuts.len() });
                }
                add_cut(&mut master, &cut);
            }
            RoundOutcome::Rounded(r) => {
                checks.merge(&r.checks);
                let lower_bound = sol.objective;
                checks.le("ratio_vs_master", r.cost, (ratio_bound(params.alpha) + 1e-6) * lower_bound, 1e-9 * inst.scale(), || {
                    format!("cost {} vs master {lower_bound}", r.cost)
                });
                return Ok(CflRun {
                    solution: r.solution.clone(),
                    cost: r.cost,
                    lower_bound,
                    ratio: ratio_of(r.cost, lower_bound),
                    cuts,
                    rounding: *r,
                    checks,
                });
            }
        }
    }
}
