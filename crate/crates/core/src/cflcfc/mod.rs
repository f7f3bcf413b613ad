//! Cluster/outlier rounding of the natural LP for unit opening costs.
//!
//! Phase one rounds clusters of small facilities around clients of minimum
//! dual radius, relocating eroded demand to outlier clients at big
//! facilities. Phase two bundles the outlier clusters into a small
//! assignment LP whose basic optimum has at most `|U|` fractional values.

mod phase1;
mod phase2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::min_cost_assignment;
use crate::instances::{self, CflInstance, FractionalSolution, IntegralSolution};
use crate::invariants::CheckLog;
use crate::lp::{self, LinearProgram, LpSolution, LpStatus, Relation, Sense};

pub use phase1::{run_phase1, Cluster, ClusterKind, Event, OutlierClient, Phase1State};
pub use phase2::{outlier_lp, phase2, Phase2State};

/// Threshold on `Σ_{F′} x′` deciding erosion and drops.
pub const HALF_TOL: f64 = 1e-7;
pub const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub eta: Vec<f64>,
}

impl DualSolution {
    pub fn objective(&self) -> f64 {
        self.alpha.iter().sum::<f64>() - self.eta.iter().sum::<f64>()
    }

    /// Largest violation of the dual constraints and sign conditions.
    pub fn infeasibility(&self, inst: &CflInstance) -> f64 {
        let mut worst = 0.0f64;
        let neg = |v: f64| (-v).max(0.0);
        for i in 0..inst.n_facilities() {
            worst = worst.max(neg(self.beta[i])).max(neg(self.eta[i]));
            let mut lhs = inst.capacity(i) * self.beta[i];
            for j in 0..inst.n_clients {
                worst = worst.max(neg(self.gamma[i][j]));
                lhs += self.gamma[i][j];
                let slack = self.beta[i] + self.gamma[i][j] + inst.dist(i, j) - self.alpha[j];
                worst = worst.max(neg(slack));
            }
            worst = worst.max(lhs - 1.0 - self.eta[i]);
        }
        for &a in &self.alpha {
            worst = worst.max(neg(a));
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalLp {
    pub primal: FractionalSolution,
    pub duals: DualSolution,
    pub objective: f64,
}

/// The natural LP with every constraint as an explicit `≥` row so each dual family
/// can be read off. Variables: `x` at `i·|D| + j`, then `y`.
pub fn natural_lp(inst: &CflInstance) -> LinearProgram {
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let mut lp = LinearProgram::new(Sense::Minimize);
    for i in 0..n_f {
        for j in 0..n_d {
            lp.add_var(0.0, f64::INFINITY, inst.dist(i, j));
        }
    }
    for i in 0..n_f {
        lp.add_var(0.0, f64::INFINITY, inst.open_cost(i));
    }
    let (xv, yv) = (|i: usize, j: usize| i * n_d + j, |i: usize| n_f * n_d + i);
    for j in 0..n_d {
        lp.add_row((0..n_f).map(|i| (xv(i, j), 1.0)).collect(), Relation::Ge, 1.0);
    }
    for i in 0..n_f {
        let mut c: Vec<(usize, f64)> = (0..n_d).map(|j| (xv(i, j), -1.0)).collect();
        c.push((yv(i), inst.capacity(i)));
        lp.add_row(c, Relation::Ge, 0.0);
    }
    for i in 0..n_f {
        for j in 0..n_d {
            lp.add_row(vec![(yv(i), 1.0), (xv(i, j), -1.0)], Relation::Ge, 0.0);
        }
    }
    for i in 0..n_f {
        lp.add_row(vec![(yv(i), -1.0)], Relation::Ge, -1.0);
    }
    lp
}

fn require_unit_costs(inst: &CflInstance) -> Result<()> {
    let bad = instances::validate(inst);
    if !bad.is_empty() {
        return Err(Error::InvalidInstance(bad.join("; ")));
    }
    if let Some(i) = (0..inst.n_facilities()).find(|&i| inst.open_cost(i) != 1.0) {
        return Err(Error::Contract(format!(
            "facility {i} has opening cost {}; unit costs required",
            inst.open_cost(i)
        )));
    }
    if inst.total_capacity() < inst.n_clients as u64 {
        return Err(Error::Infeasible(format!(
            "total capacity {} below {} clients",
            inst.total_capacity(),
            inst.n_clients
        )));
    }
    Ok(())
}

/// Optimal primal and dual of the natural LP. Client rows are normalised afterwards
/// so that `Σ_i x′_ij = 1`; this never raises the cost.
pub fn solve_natural_lp(inst: &CflInstance) -> Result<NaturalLp> {
    require_unit_costs(inst)?;
    let lp = natural_lp(inst);
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible("natural LP infeasible".into())),
        LpStatus::Unbounded => return Err(Error::SolverFailure("natural LP unbounded".into())),
    }
    Ok(extract(inst, &sol))
}

fn extract(inst: &CflInstance, sol: &LpSolution) -> NaturalLp {
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let clean = |v: f64| if v.abs() <= 1e-12 { 0.0 } else { v };
    let mut x: Vec<Vec<f64>> = (0..n_f)
        .map(|i| (0..n_d).map(|j| clean(sol.primal[i * n_d + j]).max(0.0)).collect())
        .collect();
    let y: Vec<f64> = (0..n_f).map(|i| clean(sol.primal[n_f * n_d + i]).clamp(0.0, 1.0)).collect();
    for j in 0..n_d {
        let s: f64 = (0..n_f).map(|i| x[i][j]).sum();
        if s > 1.0 {
            for row in x.iter_mut() {
                row[j] /= s;
            }
        }
    }
    let d = &sol.duals;
    let gamma = (0..n_f).map(|i| (0..n_d).map(|j| d[n_d + n_f + i * n_d + j]).collect()).collect();
    let duals = DualSolution {
        alpha: d[..n_d].to_vec(),
        beta: d[n_d..n_d + n_f].to_vec(),
        gamma,
        eta: d[n_d + n_f + n_f * n_d..].to_vec(),
    };
    NaturalLp { primal: FractionalSolution { y, x }, duals, objective: sol.objective }
}

/// Facility and client classes for the unit-cost rounding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfcClasses {
    /// `0 < y′ < 1/2`
    pub small: Vec<usize>,
    /// `y′ ≥ 1/2`
    pub big: Vec<usize>,
    /// No assignment to big facilities.
    pub small_only: Vec<usize>,
    /// Positive assignment on both sides.
    pub mixed: Vec<usize>,
    pub big_only: Vec<usize>,
}

pub fn classify_cfc(sol: &FractionalSolution) -> CfcClasses {
    let n_d = sol.x.first().map_or(0, |r| r.len());
    let mut c = CfcClasses {
        small: vec![],
        big: vec![],
        small_only: vec![],
        mixed: vec![],
        big_only: vec![],
    };
    for (i, &y) in sol.y.iter().enumerate() {
        if y >= 0.5 - HALF_TOL {
            c.big.push(i);
        } else if y > 0.0 {
            c.small.push(i);
        }
    }
    let max_over = |set: &[usize], j: usize| set.iter().map(|&i| sol.x[i][j]).fold(0.0, f64::max);
    for j in 0..n_d {
        if c.big.iter().all(|&i| sol.x[i][j] == 0.0) {
            c.small_only.push(j);
        } else if max_over(&c.small, j).min(max_over(&c.big, j)) > 0.0 {
            c.mixed.push(j);
        } else {
            c.big_only.push(j);
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfcRun {
    pub solution: IntegralSolution,
    pub cost: f64,
    /// Natural LP optimum.
    pub lower_bound: f64,
    pub ratio: f64,
    pub natural: NaturalLp,
    pub classes: CfcClasses,
    pub phase1: Phase1State,
    pub phase2: Phase2State,
    /// Fractional witness assignment over the opened facilities.
    pub x_circ: Vec<Vec<f64>>,
    pub opened: Vec<usize>,
    pub checks: CheckLog,
}

pub fn solve_cflcfc(inst: &CflInstance) -> Result<CfcRun> {
    let natural = solve_natural_lp(inst)?;
    let mut log = CheckLog::new();
    check_natural(inst, &natural, &mut log);
    let classes = classify_cfc(&natural.primal);
    let p1 = run_phase1(inst, &natural, &classes, &mut log)?;
    let p2 = phase2(inst, &natural, &classes, &p1, &mut log)?;

    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let rounded: Vec<usize> = p1.regular_facilities();
    // One on U and the rounded facilities, the outlier-LP value on G; facilities
    // with a positive value are opened.
    let mut y_star = vec![0.0; n_f];
    for &i in classes.big.iter().chain(&rounded) {
        y_star[i] = 1.0;
    }
    for (k, &i) in p2.g_facilities.iter().enumerate() {
        y_star[i] = p2.y_lp[k];
    }
    let opened: Vec<usize> = (0..n_f).filter(|&i| y_star[i] > 1e-9).collect();

    let x_circ = assemble_x_circ(inst, &natural, &classes, &p1, &p2);
    for j in 0..n_d {
        let cover: f64 = (0..n_f).map(|i| x_circ[i][j]).sum();
        log.le("witness_covers", 1.0, cover, CHECK_TOL, || format!("client {j}"));
    }
    for i in 0..n_f {
        let load: f64 = x_circ[i].iter().sum();
        log.le("witness_capacity", load, inst.capacity(i) * y_star[i], CHECK_TOL, || {
            format!("facility {i}")
        });
        for j in 0..n_d {
            let open = if y_star[i] > 1e-9 { 1.0 } else { 0.0 };
            log.le("witness_pair_bound", x_circ[i][j], open, CHECK_TOL, || {
                format!("pair ({i},{j})")
            });
        }
    }

    let solution = min_cost_assignment(inst, &opened).map_err(|e| match e {
        Error::Infeasible(m) => Error::InvariantViolation(format!("final assignment: {m}")),
        other => other,
    })?;
    let cost = solution.cost(inst);
    let lb = natural.objective;
    log.le("ratio_four", cost, 4.0 * lb, 1e-6 * inst.scale(), || format!("cost {cost} vs LP {lb}"));
    Ok(CfcRun {
        solution,
        cost,
        lower_bound: lb,
        ratio: crate::cfl::ratio_of(cost, lb),
        natural,
        classes,
        phase1: p1,
        phase2: p2,
        x_circ,
        opened,
        checks: log,
    })
}

fn check_natural(inst: &CflInstance, n: &NaturalLp, log: &mut CheckLog) {
    let gap = (n.duals.objective() - n.objective).abs();
    log.le("dual_objective_matches", gap, 0.0, 1e-7 * inst.scale(), || format!("gap {gap:e}"));
    log.le("dual_feasible", n.duals.infeasibility(inst), 0.0, CHECK_TOL, || "dual of the natural LP".into());
    for i in 0..inst.n_facilities() {
        for j in 0..inst.n_clients {
            if n.primal.x[i][j] > 0.0 {
                log.le("radius_covers_support", inst.dist(i, j), n.duals.alpha[j], CHECK_TOL, || {
                    format!("pair ({i},{j})")
                });
            }
        }
    }
}

/// `x∘`: original big-facility assignment, rescaled cluster assignment on
/// rounded facilities, and the unbundled outlier-LP assignment on `G`.
fn assemble_x_circ(
    inst: &CflInstance,
    n: &NaturalLp,
    classes: &CfcClasses,
    p1: &Phase1State,
    p2: &Phase2State,
) -> Vec<Vec<f64>> {
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let mut xc = vec![vec![0.0; n_d]; n_f];
    for &i in &classes.big {
        xc[i] = n.primal.x[i].clone();
    }
    for &i in &p1.regular_facilities() {
        for j in 0..n_d {
            xc[i][j] = p2.t[j] * p1.x_star[i][j];
        }
        for o in &p1.outliers {
            xc[i][o.parent] += p1.x_star[i][o.id];
        }
    }
    for (k, &i) in p2.g_facilities.iter().enumerate() {
        for j in 0..n_d {
            xc[i][j] = p2.h[k][j];
        }
        for o in &p1.outliers {
            xc[i][o.parent] += p2.h[k][o.id];
        }
    }
    xc
}
