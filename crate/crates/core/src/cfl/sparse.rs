//! Partial assignment `g` from the b-matching on overloaded big facilities,
//! and the sparse flow `f′` restricted to big facilities.

use serde::{Deserialize, Serialize};

use super::Classification;
use crate::flow::{alternating_reach, max_b_matching, BMatching};
use crate::instances::{CflInstance, FractionalSolution};
use crate::invariants::CheckLog;
use crate::mfn::{ArcKind, CommodityFlow, MfnNetwork, PartialAssignment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GConstruction {
    pub g: PartialAssignment,
    /// `h` over all facilities (zero outside the overloaded big ones).
    pub h: Vec<Vec<f64>>,
    pub tight: Vec<bool>,
    /// Fully-assigned clients unreachable from partially-assigned ones.
    pub local: Vec<bool>,
    #[serde(skip)]
    pub matching: Option<BMatching>,
}

/// b-matching on `U>` with caps `x′/(1−α)`; `g = h` on tightly-occupied
/// facilities and zero elsewhere.
pub fn build_g(
    inst: &CflInstance,
    cand: &FractionalSolution,
    class: &Classification,
    alpha: f64,
    tol: f64,
) -> GConstruction {
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let mut g = PartialAssignment::zeros(n_f, n_d);
    let mut h = vec![vec![0.0; n_d]; n_f];
    let mut tight = vec![false; n_f];
    if class.big_gt.is_empty() {
        // No matching: every client is partially assigned.
        return GConstruction { g, h, tight, local: vec![false; n_d], matching: None };
    }
    let cap: Vec<Vec<f64>> = class
        .big_gt
        .iter()
        .map(|&i| cand.x[i].iter().map(|&v| v / (1.0 - alpha)).collect())
        .collect();
    let u: Vec<f64> = class.big_gt.iter().map(|&i| inst.capacity(i)).collect();
    let m = max_b_matching(&cap, &u, n_d);
    let reach = alternating_reach(&m, n_d, tol);
    for (pos, &i) in class.big_gt.iter().enumerate() {
        h[i] = m.h[pos].clone();
        if reach.facilities[pos] {
            tight[i] = true;
            g.g[i] = m.h[pos].clone();
        }
    }
    let local = reach.clients.iter().map(|&r| !r).collect();
    GConstruction { g, h, tight, local, matching: Some(m) }
}

/// Per-pair load `x‴` of the sparse flow on big facilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFlow {
    pub x: Vec<Vec<f64>>,
}

impl SparseFlow {
    pub fn load(&self, i: usize) -> f64 {
        self.x[i].iter().sum()
    }
}

/// `Σ_{p ∈ P(i,j)} f_p` for all pairs in one pass.
pub(crate) fn pair_flows(n_f: usize, n_d: usize, cf: &CommodityFlow) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n_d]; n_f];
    for p in &cf.paths {
        out[p.via][p.commodity] += p.flow;
    }
    out
}

pub fn build_sparse_flow(
    net: &MfnNetwork,
    cf: &CommodityFlow,
    gc: &GConstruction,
    class: &Classification,
    alpha: f64,
) -> SparseFlow {
    let (n_f, n_d) = (net.n_f, net.n_d);
    let pf = pair_flows(n_f, n_d, cf);
    let mut x = vec![vec![0.0; n_d]; n_f];
    let gt: Vec<bool> = (0..n_f).map(|i| class.big_gt.binary_search(&i).is_ok()).collect();
    for &i in &class.big {
        for j in 0..n_d {
            x[i][j] = if gc.tight[i] {
                (1.0 - alpha) * gc.g.g[i][j]
            } else if gt[i] && gc.local[j] {
                (1.0 - alpha) * gc.h[i][j]
            } else {
                pf[i][j]
            };
        }
    }
    SparseFlow { x }
}

/// Foreign commodity flow through `j^s` for each locally-assigned client.
pub(crate) fn check_local_isolation(
    net: &MfnNetwork,
    cf: &CommodityFlow,
    gc: &GConstruction,
    log: &mut CheckLog,
    tol: f64,
) {
    let mut foreign = vec![0.0; net.n_d];
    for p in &cf.paths {
        for &a in &p.arcs {
            if let ArcKind::Supply { j, .. } = net.arcs[a].kind {
                if j != p.commodity && gc.local[j] {
                    foreign[j] += p.flow;
                }
            }
        }
    }
    for (j, &f) in foreign.iter().enumerate() {
        if gc.local[j] {
            log.le("local_clients_isolated", f, 0.0, tol, || format!("client {j}"));
        }
    }
}

/// Tightly-occupied facilities are saturated by `h`.
pub(crate) fn check_tight_saturated(inst: &CflInstance, gc: &GConstruction, log: &mut CheckLog, tol: f64) {
    for (i, &t) in gc.tight.iter().enumerate() {
        if t {
            let load: f64 = gc.h[i].iter().sum();
            log.le("tight_saturated", inst.capacity(i) - load, 0.0, tol, || format!("facility {i}"));
        }
    }
}
