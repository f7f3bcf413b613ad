//! Iterative rounding of the small facilities through the tuple LP.

use serde::{Deserialize, Serialize};

use super::RoundingParams;
use crate::error::{Error, Result};
use crate::instances::CflInstance;
use crate::invariants::CheckLog;
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense};

/// Residual instance `(F′, D′, r′)` with the frozen base demands `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTuple {
    pub facilities: Vec<usize>,
    pub clients: Vec<usize>,
    /// Indexed by client id; only entries in `clients` are meaningful.
    pub r_prime: Vec<f64>,
    pub r: Vec<f64>,
}

impl ParamTuple {
    /// Drops clients with `r′ ≤ α·r` (plus `tol`); returns them.
    pub fn prune(&mut self, alpha: f64, tol: f64) -> Vec<usize> {
        let (r, rp) = (&self.r, &self.r_prime);
        let (keep, drop): (Vec<usize>, Vec<usize>) =
            self.clients.iter().partition(|&&j| rp[j] > alpha * r[j] + tol);
        self.clients = keep;
        drop
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub facility: usize,
    /// `F′` and `D′` at the start of the iteration.
    pub facilities: Vec<usize>,
    pub clients: Vec<usize>,
    pub r_prime: Vec<f64>,
    /// `x†[a][b]` for `facilities[a]`, `clients[b]`.
    pub x_dag: Vec<Vec<f64>>,
    pub y_dag: Vec<f64>,
    pub lp_objective: f64,
    /// Chosen because `y† = (1−α)/2`.
    pub saturated: bool,
    pub delta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_pair: Vec<Vec<f64>>,
    /// `x″` column of the chosen facility, indexed by client id.
    pub column: Vec<f64>,
    /// `r′` after the update, indexed by client id.
    pub r_prime_after: Vec<f64>,
    pub removed_clients: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeResult {
    /// `I \ F′` in rounding order.
    pub rounded: Vec<usize>,
    /// `x″`, `n_f × n_d`.
    pub x2: Vec<Vec<f64>>,
    pub iterations: Vec<IterationRecord>,
}

/// The tuple LP. Variables: `y` of `facilities[a]` at `a`, then
/// `x` of `(facilities[a], clients[b])` at `|F′| + a·|D′| + b`.
pub fn tuple_lp(inst: &CflInstance, t: &ParamTuple, alpha: f64) -> LinearProgram {
    let (nf, nd) = (t.facilities.len(), t.clients.len());
    let mut lp = LinearProgram::new(Sense::Minimize);
    for &i in &t.facilities {
        lp.add_var(0.0, (1.0 - alpha) / 2.0, inst.open_cost(i));
    }
    for &i in &t.facilities {
        for &j in &t.clients {
            lp.add_var(0.0, f64::INFINITY, inst.dist(i, j));
        }
    }
    let xv = |a: usize, b: usize| nf + a * nd + b;
    for (b, &j) in t.clients.iter().enumerate() {
        lp.add_row((0..nf).map(|a| (xv(a, b), 1.0)).collect(), Relation::Eq, t.r_prime[j]);
    }
    for (a, &i) in t.facilities.iter().enumerate() {
        let mut c: Vec<(usize, f64)> = (0..nd).map(|b| (xv(a, b), 1.0)).collect();
        c.push((a, -inst.capacity(i)));
        lp.add_row(c, Relation::Le, 0.0);
    }
    let k = 2.0 * alpha / (1.0 - alpha);
    for a in 0..nf {
        for (b, &j) in t.clients.iter().enumerate() {
            lp.add_row(vec![(xv(a, b), 1.0), (a, -k * t.r[j])], Relation::Le, 0.0);
        }
    }
    lp
}

/// `(3·o_i·y_i + 2·Σ_j c_ij·x_ij) / Σ_j x_ij`; `None` without mass.
pub fn theta(inst: &CflInstance, i: usize, clients: &[usize], x: &[f64], y: f64) -> Option<f64> {
    let mass: f64 = x.iter().sum();
    if mass <= 1e-12 {
        return None;
    }
    let conn: f64 = clients.iter().zip(x).map(|(&j, &v)| inst.dist(i, j) * v).sum();
    Some((3.0 * inst.open_cost(i) * y + 2.0 * conn) / mass)
}

/// Point `(x†⁽⁰⁾, y†⁽⁰⁾)` in the layout of [`tuple_lp`]: `x† = Σ_{P(i,j)} f_p`
/// and `y† = (1−α)/(2α)·y′`.
pub fn tuple_lp_witness(t: &ParamTuple, pair_flow: &[Vec<f64>], y: &[f64], alpha: f64) -> Vec<f64> {
    let mut z: Vec<f64> = t.facilities.iter().map(|&i| (1.0 - alpha) / (2.0 * alpha) * y[i]).collect();
    for &i in &t.facilities {
        for &j in &t.clients {
            z.push(pair_flow[i][j]);
        }
    }
    z
}

pub fn iterative_round(
    inst: &CflInstance,
    start: &ParamTuple,
    params: &RoundingParams,
    log: &mut CheckLog,
) -> Result<IterativeResult> {
    let (alpha, tol, ctol) = (params.alpha, params.tol, params.check_tol);
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let half = (1.0 - alpha) / 2.0;
    let mut t = start.clone();
    let mut x2 = vec![vec![0.0; n_d]; n_f];
    let mut rounded = Vec::new();
    let mut iterations = Vec::new();
    let budget = start.facilities.len();
    while !t.clients.is_empty() {
        if iterations.len() == budget {
            log.flag("iterations_within_small_count", false, || format!("exceeded {budget}"));
            return Err(Error::InvariantViolation(format!(
                "iterative rounding did not finish within {budget} iterations"
            )));
        }
        let lp = tuple_lp(inst, &t, alpha);
        let sol = lp::solve(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::InvariantViolation(format!(
                "tuple LP {:?} with {} facilities, {} clients",
                sol.status,
                t.facilities.len(),
                t.clients.len()
            )));
        }
        let (nf, nd) = (t.facilities.len(), t.clients.len());
        let y_dag: Vec<f64> = sol.primal[..nf].iter().map(|v| v.max(0.0)).collect();
        let x_dag: Vec<Vec<f64>> = (0..nf)
            .map(|a| (0..nd).map(|b| sol.primal[nf + a * nd + b].max(0.0)).collect())
            .collect();

        let saturated = (0..nf).find(|&a| (y_dag[a] - half).abs() <= tol);
        let pick = match saturated {
            Some(a) => a,
            None => {
                let mut best: Option<(usize, f64)> = None;
                for a in 0..nf {
                    let th = theta(inst, t.facilities[a], &t.clients, &x_dag[a], y_dag[a]);
                    if let Some(th) = th {
                        if best.is_none_or(|(_, b)| th < b) {
                            best = Some((a, th));
                        }
                    }
                }
                best.ok_or_else(|| {
                    Error::InvariantViolation("no tuple LP facility carries assignment".into())
                })?
                .0
            }
        };
        let i = t.facilities[pick];
        let mut delta = vec![0.0; nd];
        let mut sigma_pair = vec![vec![0.0; nd]; nf];
        let mut sigma = vec![0.0; nf];
        sigma[pick] = 1.0;
        if saturated.is_none() {
            let scale = half / y_dag[pick] - 1.0;
            for b in 0..nd {
                delta[b] = scale * x_dag[pick][b];
                let others: f64 = (0..nf).filter(|&a| a != pick).map(|a| x_dag[a][b]).sum();
                log.le("gather_within_supply", delta[b], others, ctol, || {
                    format!("facility {i}, client {}", t.clients[b])
                });
                log.le("gather_nonnegative", -delta[b], 0.0, ctol, || format!("facility {i}"));
                if others > 0.0 {
                    for a in (0..nf).filter(|&a| a != pick) {
                        sigma_pair[a][b] = x_dag[a][b] / others * delta[b];
                    }
                }
                let got: f64 = (0..nf).filter(|&a| a != pick).map(|a| sigma_pair[a][b]).sum();
                log.le("gather_fulfilled", (got - delta[b]).abs(), 0.0, 1e-7, || {
                    format!("facility {i}, client {}", t.clients[b])
                });
            }
            for a in (0..nf).filter(|&a| a != pick) {
                let mass: f64 = x_dag[a].iter().sum();
                if mass > 0.0 {
                    sigma[a] = sigma_pair[a].iter().sum::<f64>() / mass;
                }
                log.le("sigma_at_most_one", sigma[a], 1.0, ctol, || {
                    format!("facility {}", t.facilities[a])
                });
            }
        }
        let mut column = vec![0.0; n_d];
        for (b, &j) in t.clients.iter().enumerate() {
            column[j] = (0..nf).map(|a| sigma[a] * x_dag[a][b]).sum();
        }
        let load: f64 = column.iter().sum();
        let own: f64 = x_dag[pick].iter().sum();
        if saturated.is_none() {
            log.le("rounded_load_identity", (load - half / y_dag[pick] * own).abs(), 0.0, ctol, || {
                format!("facility {i}")
            });
        }
        log.le("rounded_small_load", load, half * inst.capacity(i), ctol, || format!("facility {i}"));
        x2[i] = column.clone();

        let record_r = t.r_prime.clone();
        let (old_f, old_d) = (t.facilities.clone(), t.clients.clone());
        for (b, &j) in old_d.iter().enumerate() {
            t.r_prime[j] = (0..nf).filter(|&a| a != pick).map(|a| (1.0 - sigma[a]) * x_dag[a][b]).sum();
        }
        t.facilities.remove(pick);
        let removed = t.prune(alpha, tol);
        rounded.push(i);
        iterations.push(IterationRecord {
            facility: i,
            facilities: old_f,
            clients: old_d,
            r_prime: record_r,
            x_dag,
            y_dag,
            lp_objective: sol.objective,
            saturated: saturated.is_some(),
            delta,
            sigma,
            sigma_pair,
            column,
            r_prime_after: t.r_prime.clone(),
            removed_clients: removed,
        });
    }
    log.le("iterations_within_small_count", iterations.len() as f64, budget as f64, 0.0, || {
        "iteration count".into()
    });
    Ok(IterativeResult { rounded, x2, iterations })
}
