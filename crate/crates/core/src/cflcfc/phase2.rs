//! Phase two: bundle outlier clusters into the outlier LP and unbundle its optimum.

use serde::{Deserialize, Serialize};

use super::{CfcClasses, NaturalLp, Phase1State, CHECK_TOL};
use crate::error::{Error, Result};
use crate::instances::CflInstance;
use crate::invariants::CheckLog;
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense, EXACT_MAX_VARS};

/// Exact arithmetic is used for the outlier LP up to this many facilities in `G`.
pub const EXACT_MAX_G: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2State {
    /// `x′` and `y′` when phase two starts.
    pub x_entry: Vec<Vec<f64>>,
    pub y_entry: Vec<f64>,
    /// `G` in increasing order, and the outlier cluster owning each.
    pub g_facilities: Vec<usize>,
    pub owner: Vec<usize>,
    /// Outlier-LP clients: the big facilities.
    pub hosts: Vec<usize>,
    /// Scaling factor per column (original clients, then outliers).
    pub t: Vec<f64>,
    pub d: Vec<f64>,
    /// Bundled assignment, `G × hosts`.
    pub g: Vec<Vec<f64>>,
    pub lp_objective: f64,
    pub x_lp: Vec<Vec<f64>>,
    pub y_lp: Vec<f64>,
    pub exact: bool,
    /// Positions in `g_facilities` with fractional `y″`.
    pub fractional: Vec<usize>,
    /// Unbundled assignment, `G × columns`.
    pub h: Vec<Vec<f64>>,
}

/// Outlier LP: `y` of `g[a]` at `a`, `x` of `(g[a], hosts[p])` at `|G| + a·|U| + p`.
pub fn outlier_lp(inst: &CflInstance, g: &[usize], hosts: &[usize], d: &[f64]) -> LinearProgram {
    let (ng, nu) = (g.len(), hosts.len());
    let mut lp = LinearProgram::new(Sense::Minimize);
    for &i in g {
        lp.add_var(0.0, 1.0, inst.open_cost(i));
    }
    for &i in g {
        for &w in hosts {
            lp.add_var(0.0, f64::INFINITY, inst.fac_dist(i, w));
        }
    }
    let xv = |a: usize, p: usize| ng + a * nu + p;
    for p in 0..nu {
        lp.add_row((0..ng).map(|a| (xv(a, p), 1.0)).collect(), Relation::Ge, d[p]);
    }
    for (a, &i) in g.iter().enumerate() {
        let mut c: Vec<(usize, f64)> = (0..nu).map(|p| (xv(a, p), 1.0)).collect();
        c.push((a, -inst.capacity(i)));
        lp.add_row(c, Relation::Le, 0.0);
    }
    lp
}

pub fn phase2(
    inst: &CflInstance,
    natural: &NaturalLp,
    classes: &CfcClasses,
    p1: &Phase1State,
    log: &mut CheckLog,
) -> Result<Phase2State> {
    if !(p1.clients.is_empty() && p1.pending.is_empty()) {
        return Err(Error::Contract("phase two needs D′ ∪ H′ = ∅".into()));
    }
    let n_d = p1.n_d;
    let cols = p1.n_cols();
    let x0 = &natural.primal.x;
    let (x2, y2) = (&p1.x, &p1.y);
    let mut sats = p1.outlier_satellites();
    sats.sort_unstable();
    let g_facilities: Vec<usize> = sats.iter().map(|s| s.0).collect();
    let owner: Vec<usize> = sats.iter().map(|s| s.1).collect();
    let hosts = classes.big.clone();
    let rounded = p1.regular_facilities();
    let host_of = |o: usize| p1.outliers.iter().find(|h| h.id == o).map(|h| h.host);

    entry_checks(inst, classes, p1, &g_facilities, &rounded, x0, log);

    let mut t = vec![1.0; cols];
    for (l, tl) in t.iter_mut().enumerate().take(n_d) {
        let denom: f64 = classes.small.iter().map(|&k| p1.x_star[k][l]).sum::<f64>()
            + g_facilities.iter().map(|&k| x2[k][l]).sum::<f64>();
        if denom > 1e-12 {
            let on_big: f64 = classes.big.iter().map(|&i| x0[i][l]).sum();
            *tl = (1.0 - on_big - p1.residual[l]) / denom;
        }
        log.le("scale_in_range", -*tl, 0.0, CHECK_TOL, || format!("client {l}"));
        log.le("scale_in_range", *tl, 2.0, CHECK_TOL, || format!("client {l}"));
    }

    let weighted = |i: usize| -> f64 { (0..cols).map(|l| t[l] * x2[i][l]).sum() };
    let (ng, nu) = (g_facilities.len(), hosts.len());
    let mut g = vec![vec![0.0; nu]; ng];
    let mut d = vec![0.0; nu];
    for (a, &i) in g_facilities.iter().enumerate() {
        let w = host_of(owner[a]).ok_or_else(|| Error::InvariantViolation("cluster without host".into()))?;
        let p = hosts.iter().position(|&h| h == w).ok_or_else(|| {
            Error::InvariantViolation(format!("host {w} is not a big facility"))
        })?;
        g[a][p] = weighted(i);
        d[p] += g[a][p];
    }

    let lp = outlier_lp(inst, &g_facilities, &hosts, &d);
    let mut witness: Vec<f64> = g_facilities.iter().map(|&i| 2.0 * y2[i]).collect();
    witness.extend(g.iter().flatten());
    let viol = lp::primal_violation(&lp, &witness);
    log.le("outlier_lp_witness", viol, 0.0, CHECK_TOL, || "bundled witness".into());

    let exact = ng <= EXACT_MAX_G && lp.n_vars() <= EXACT_MAX_VARS;
    let (sol, fractional) = if exact {
        let ex = lp::solve_exact(&lp)?;
        let frac: Vec<usize> = (0..ng)
            .filter(|&a| {
                let v = &ex.primal[a];
                *v > num_rational::BigRational::from_integer(0.into())
                    && *v < num_rational::BigRational::from_integer(1.into())
            })
            .collect();
        (ex.to_f64(&lp), frac)
    } else {
        let s = lp::solve(&lp)?;
        let frac = (0..ng).filter(|&a| s.primal[a] > 1e-9 && s.primal[a] < 1.0 - 1e-9).collect();
        (s, frac)
    };
    if sol.status != LpStatus::Optimal {
        return Err(Error::InvariantViolation(format!("outlier LP {:?}", sol.status)));
    }
    log.le("fractional_at_most_hosts", fractional.len() as f64, nu as f64, 0.0, || {
        format!("{} fractional of {ng}", fractional.len())
    });
    let y_lp: Vec<f64> = sol.primal[..ng].to_vec();
    let x_lp: Vec<Vec<f64>> =
        (0..ng).map(|a| (0..nu).map(|p| sol.primal[ng + a * nu + p].max(0.0)).collect()).collect();

    // Unbundle, normalising by the delivered amount (≥ d_w).
    let mut bundle = vec![vec![0.0; cols]; nu];
    for (a, row) in g.iter().enumerate() {
        if let Some(p) = row.iter().position(|&v| v != 0.0).or_else(|| {
            host_of(owner[a]).and_then(|w| hosts.iter().position(|&h| h == w))
        }) {
            for l in 0..cols {
                bundle[p][l] += t[l] * x2[g_facilities[a]][l];
            }
        }
    }
    let delivered: Vec<f64> = (0..nu).map(|p| (0..ng).map(|a| x_lp[a][p]).sum()).collect();
    let mut h = vec![vec![0.0; cols]; ng];
    for a in 0..ng {
        for p in 0..nu {
            if delivered[p] > 1e-12 && x_lp[a][p] > 0.0 {
                let f = x_lp[a][p] / delivered[p];
                for l in 0..cols {
                    h[a][l] += f * bundle[p][l];
                }
            }
        }
    }
    for l in 0..cols {
        let got: f64 = (0..ng).map(|a| h[a][l]).sum();
        let want: f64 = g_facilities.iter().map(|&i| t[l] * x2[i][l]).sum();
        log.le("unbundle_conserves", (got - want).abs(), 0.0, CHECK_TOL, || format!("column {l}"));
    }
    Ok(Phase2State {
        x_entry: x2.clone(),
        y_entry: y2.clone(),
        g_facilities,
        owner,
        hosts,
        t,
        d,
        g,
        lp_objective: sol.objective,
        x_lp,
        y_lp,
        exact,
        fractional,
        h,
    })
}

fn entry_checks(
    inst: &CflInstance,
    classes: &CfcClasses,
    p1: &Phase1State,
    g: &[usize],
    rounded: &[usize],
    x0: &[Vec<f64>],
    log: &mut CheckLog,
) {
    let x2 = &p1.x;
    for &i in g {
        let load: f64 = x2[i].iter().sum();
        log.le("entry_capacity", load, inst.capacity(i) * p1.y[i], CHECK_TOL, || format!("facility {i}"));
    }
    let kept = |j: usize| -> f64 {
        classes.small.iter().map(|&k| p1.x_star[k][j]).sum::<f64>() + g.iter().map(|&k| x2[k][j]).sum::<f64>()
    };
    for &j in &classes.small_only {
        log.le("entry_small_only_half", 0.5, kept(j), CHECK_TOL, || format!("client {j}"));
    }
    for &j in &classes.mixed {
        let big: f64 = classes.big.iter().map(|&i| x0[i][j]).sum();
        log.le("entry_mixed_half", 0.5, kept(j) + big, CHECK_TOL, || format!("client {j}"));
    }
    for o in &p1.outliers {
        let got: f64 = rounded.iter().map(|&k| p1.x_star[k][o.id]).sum::<f64>()
            + g.iter().map(|&k| x2[k][o.id]).sum::<f64>();
        log.le("entry_outlier_kept", (got - o.demand).abs(), 0.0, CHECK_TOL, || format!("outlier {}", o.id));
        for &i in g {
            if x2[i][o.id] > 0.0 {
                log.le("outlier_radius", inst.fac_dist(i, o.host), o.radius, CHECK_TOL, || {
                    format!("facility {i}, outlier {}", o.id)
                });
            }
        }
    }
}
