//! The multicommodity flow network MFN(x, y, g), its edge-based
//! feasibility LP, and path decomposition.
//!
//! Node layout: client `j` has source `j` and sink `n_d + j`; facility `i`
//! has node `2·n_d + i` and sink-side node `2·n_d + n_f + i`. Arc
//! capacities are affine in the parameter vector `p = (x, y)` with `x_ij` at
//! `i·n_d + j` and `y_i` at `n_f·n_d + i`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{CflInstance, FractionalSolution};
use crate::lp::{self, AffineForm, Hyperplane, LinearProgram, LpStatus, Relation, Sense, SolveOptions};

/// Demands at or below this are dropped from the feasibility LP.
pub const DEMAND_EPS: f64 = 1e-9;
/// Phase-one residual below which the network counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;
const FLOW_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialAssignment {
    /// `g[i][j]`
    pub g: Vec<Vec<f64>>,
}

impl PartialAssignment {
    pub fn zeros(n_f: usize, n_d: usize) -> Self {
        PartialAssignment { g: vec![vec![0.0; n_d]; n_f] }
    }

    /// r_j = 1 − Σ_i g_ij
    pub fn demand(&self, j: usize) -> f64 {
        1.0 - self.g.iter().map(|row| row[j]).sum::<f64>()
    }

    pub fn load(&self, i: usize) -> f64 {
        self.g[i].iter().sum()
    }

    pub fn validity_violations(&self, inst: &CflInstance, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (i, row) in self.g.iter().enumerate() {
            if let Some(j) = row.iter().position(|&v| v < -tol || !v.is_finite()) {
                out.push(format!("g[{i}][{j}] = {}", row[j]));
            }
            if self.load(i) > inst.capacity(i) + tol {
                out.push(format!("facility {i} over-assigned: {}", self.load(i)));
            }
        }
        for j in 0..inst.n_clients {
            if self.demand(j) < -tol {
                out.push(format!("client {j} over-assigned: {}", 1.0 - self.demand(j)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcKind {
    /// (j^s, i), capacity x_ij
    Supply { i: usize, j: usize },
    /// (i, j^s), capacity g_ij
    Return { i: usize, j: usize },
    /// (i, i^t), capacity y_i·(u_i − Σ_j g_ij)
    Facility { i: usize },
    /// (i^t, j^t), capacity r_j·y_i; only commodity j may use it
    Sink { i: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfnArc {
    pub kind: ArcKind,
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
    pub form: AffineForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfnNetwork {
    pub n_f: usize,
    pub n_d: usize,
    pub arcs: Vec<MfnArc>,
    /// r^(g)_j
    pub demand: Vec<f64>,
    /// Parameter vector the capacities were evaluated at.
    pub params: Vec<f64>,
    pub g: PartialAssignment,
}

impl MfnNetwork {
    pub fn n_nodes(&self) -> usize {
        2 * (self.n_f + self.n_d)
    }
    pub fn client_source(&self, j: usize) -> usize {
        j
    }
    pub fn client_sink(&self, j: usize) -> usize {
        self.n_d + j
    }
    pub fn facility(&self, i: usize) -> usize {
        2 * self.n_d + i
    }
    pub fn facility_sink(&self, i: usize) -> usize {
        2 * self.n_d + self.n_f + i
    }
    pub fn n_params(&self) -> usize {
        self.n_f * (self.n_d + 1)
    }

    /// Arc index helpers; arcs are laid out per facility as
    /// supply×n_d, return×n_d, facility, sink×n_d.
    pub fn supply_arc(&self, i: usize, j: usize) -> usize {
        i * (3 * self.n_d + 1) + j
    }
    pub fn return_arc(&self, i: usize, j: usize) -> usize {
        i * (3 * self.n_d + 1) + self.n_d + j
    }
    pub fn facility_arc(&self, i: usize) -> usize {
        i * (3 * self.n_d + 1) + 2 * self.n_d
    }
    pub fn sink_arc(&self, i: usize, j: usize) -> usize {
        i * (3 * self.n_d + 1) + 2 * self.n_d + 1 + j
    }
}

pub fn x_param(n_d: usize, i: usize, j: usize) -> usize {
    i * n_d + j
}

pub fn y_param(n_f: usize, n_d: usize, i: usize) -> usize {
    n_f * n_d + i
}

/// Flattens `(x, y)` into the parameter layout.
pub fn params(sol: &FractionalSolution) -> Vec<f64> {
    let mut p: Vec<f64> = sol.x.iter().flatten().copied().collect();
    p.extend_from_slice(&sol.y);
    p
}

fn clamp_cap(v: f64) -> f64 {
    if (-1e-12..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

pub fn build(inst: &CflInstance, sol: &FractionalSolution, g: &PartialAssignment) -> Result<MfnNetwork> {
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let bad = g.validity_violations(inst, 1e-9);
    if !bad.is_empty() {
        return Err(Error::Contract(format!("invalid partial assignment: {}", bad.join("; "))));
    }
    let p = params(sol);
    let demand: Vec<f64> = (0..n_d).map(|j| g.demand(j).max(0.0)).collect();
    let mut net = MfnNetwork {
        n_f,
        n_d,
        arcs: Vec::with_capacity(n_f * (3 * n_d + 1)),
        demand,
        params: p.clone(),
        g: g.clone(),
    };
    for i in 0..n_f {
        let (fi, ft) = (net.facility(i), net.facility_sink(i));
        for j in 0..n_d {
            let form = AffineForm { constant: 0.0, terms: vec![(x_param(n_d, i, j), 1.0)] };
            net.arcs.push(MfnArc {
                kind: ArcKind::Supply { i, j },
                tail: j,
                head: fi,
                capacity: clamp_cap(form.eval(&p)),
                form,
            });
        }
        for j in 0..n_d {
            net.arcs.push(MfnArc {
                kind: ArcKind::Return { i, j },
                tail: fi,
                head: j,
                capacity: g.g[i][j].max(0.0),
                form: AffineForm::constant(g.g[i][j].max(0.0)),
            });
        }
        let spare = (inst.capacity(i) - g.load(i)).max(0.0);
        let form = AffineForm { constant: 0.0, terms: vec![(y_param(n_f, n_d, i), spare)] };
        net.arcs.push(MfnArc {
            kind: ArcKind::Facility { i },
            tail: fi,
            head: ft,
            capacity: clamp_cap(form.eval(&p)),
            form,
        });
        for j in 0..n_d {
            let form = AffineForm {
                constant: 0.0,
                terms: vec![(y_param(n_f, n_d, i), net.demand[j])],
            };
            net.arcs.push(MfnArc {
                kind: ArcKind::Sink { i, j },
                tail: ft,
                head: n_d + j,
                capacity: clamp_cap(form.eval(&p)),
                form,
            });
        }
    }
    if let Some(a) = net.arcs.iter().find(|a| a.capacity < 0.0 || !a.capacity.is_finite()) {
        return Err(Error::Contract(format!("negative capacity on {:?}", a.kind)));
    }
    Ok(net)
}

/// A single flow path of one commodity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub commodity: usize,
    pub arcs: Vec<usize>,
    pub flow: f64,
    /// Facility whose sink-side node the path leaves through.
    pub via: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommodityFlow {
    /// `flows[j][a]`: flow of commodity j on arc a.
    pub flows: Vec<Vec<f64>>,
    pub paths: Vec<FlowPath>,
    /// Circulations removed during decomposition, as total flow per commodity.
    pub cycle_flow: Vec<f64>,
    /// Rows in the feasibility LP (bound on the number of paths).
    pub lp_rows: usize,
}

impl CommodityFlow {
    /// Σ_{p ∈ P(i,j)} f_p
    pub fn pair_flow(&self, i: usize, j: usize) -> f64 {
        self.paths
            .iter()
            .filter(|p| p.commodity == j && p.via == i)
            .map(|p| p.flow)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MfnOutcome {
    Feasible(CommodityFlow),
    Cut(Hyperplane),
}

/// Edge-based feasibility LP and, per LP column, its (commodity, arc).
pub struct FeasibilityLp {
    pub lp: LinearProgram,
    pub columns: Vec<(usize, usize)>,
}

/// Arcs of commodity k lying on some k^s → k^t walk through arcs whose
/// capacity is not identically zero in the parameters.
fn commodity_arcs(net: &MfnNetwork, k: usize) -> Vec<usize> {
    let usable = |a: &MfnArc| match a.kind {
        ArcKind::Supply { .. } => true,
        ArcKind::Return { i, j } => net.g.g[i][j] > 0.0,
        ArcKind::Facility { .. } => a.form.terms.iter().any(|t| t.1 > 0.0),
        ArcKind::Sink { j, .. } => j == k,
    };
    let n = net.n_nodes();
    let mut out_adj = vec![Vec::new(); n];
    let mut in_adj = vec![Vec::new(); n];
    for (idx, a) in net.arcs.iter().enumerate() {
        if usable(a) {
            out_adj[a.tail].push(idx);
            in_adj[a.head].push(idx);
        }
    }
    let reach = |start: usize, adj: &Vec<Vec<usize>>, fwd: bool| {
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(v) = q.pop_front() {
            for &e in &adj[v] {
                let w = if fwd { net.arcs[e].head } else { net.arcs[e].tail };
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        seen
    };
    let from_src = reach(net.client_source(k), &out_adj, true);
    let to_sink = reach(net.client_sink(k), &in_adj, false);
    (0..net.arcs.len())
        .filter(|&e| {
            let a = &net.arcs[e];
            usable(a) && from_src[a.tail] && to_sink[a.head]
        })
        .collect()
}

pub fn feasibility_lp(net: &MfnNetwork) -> FeasibilityLp {
    let mut lp = LinearProgram::new(Sense::Minimize);
    lp.n_params = net.n_params();
    let mut columns = Vec::new();
    let mut on_arc: Vec<Vec<usize>> = vec![Vec::new(); net.arcs.len()];
    for k in 0..net.n_d {
        if net.demand[k] <= DEMAND_EPS {
            continue;
        }
        let arcs = commodity_arcs(net, k);
        let mut node_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.n_nodes()];
        let mut touched = vec![false; net.n_nodes()];
        for &e in &arcs {
            let v = lp.add_var(0.0, f64::INFINITY, 0.0);
            columns.push((k, e));
            on_arc[e].push(v);
            let a = &net.arcs[e];
            node_rows[a.tail].push((v, 1.0));
            node_rows[a.head].push((v, -1.0));
            touched[a.tail] = true;
            touched[a.head] = true;
        }
        let src = net.client_source(k);
        let snk = net.client_sink(k);
        if !touched[src] {
            // no route at all: 0 = r_k
            lp.add_param_row(Vec::new(), Relation::Eq, AffineForm::constant(net.demand[k]), &net.params);
            continue;
        }
        for v in 0..net.n_nodes() {
            if !touched[v] || v == snk {
                continue;
            }
            let rhs = if v == src { net.demand[k] } else { 0.0 };
            let coeffs = std::mem::take(&mut node_rows[v]);
            lp.add_param_row(coeffs, Relation::Eq, AffineForm::constant(rhs), &net.params);
        }
    }
    for (e, vars) in on_arc.iter().enumerate() {
        if vars.is_empty() {
            continue;
        }
        let coeffs = vars.iter().map(|&v| (v, 1.0)).collect();
        lp.add_param_row(coeffs, Relation::Le, net.arcs[e].form.clone(), &net.params);
    }
    FeasibilityLp { lp, columns }
}

/// Decides feasibility of the network: a basic flow with its path
/// decomposition, or a cut over `(x, y)` violated by the current parameters.
pub fn feasible(net: &MfnNetwork) -> Result<MfnOutcome> {
    let f = feasibility_lp(net);
    let opts = SolveOptions { infeasibility_tol: FEASIBILITY_TOL, ..SolveOptions::default() };
    let sol = lp::solve_with(&f.lp, &opts)?;
    match sol.status {
        LpStatus::Infeasible => {
            let mut cut = lp::farkas_cut(&f.lp, &sol)?;
            cut.sparsify(1e-12);
            Ok(MfnOutcome::Cut(cut))
        }
        LpStatus::Unbounded => Err(Error::SolverFailure("feasibility lp unbounded".into())),
        LpStatus::Optimal => {
            let mut flows = vec![vec![0.0; net.arcs.len()]; net.n_d];
            for (v, &(k, e)) in f.columns.iter().enumerate() {
                flows[k][e] = sol.primal[v].max(0.0);
            }
            let mut cf = path_decompose(net, &flows)?;
            cf.lp_rows = f.lp.rows.len();
            if cf.paths.len() > cf.lp_rows {
                return Err(Error::InvariantViolation(format!(
                    "{} paths exceed {} constraints",
                    cf.paths.len(),
                    cf.lp_rows
                )));
            }
            Ok(MfnOutcome::Feasible(cf))
        }
    }
}

/// Conservation tolerance accepted by [`path_decompose`].
pub const CONSERVATION_TOL: f64 = 1e-6;

/// Greedy path stripping per commodity; leftover circulations are cancelled
/// and reported in `cycle_flow`.
pub fn path_decompose(net: &MfnNetwork, flows: &[Vec<f64>]) -> Result<CommodityFlow> {
    let mut paths = Vec::new();
    let mut cycle_flow = vec![0.0; net.n_d];
    for k in 0..net.n_d {
        let mut f = flows[k].clone();
        let mut excess = vec![0.0; net.n_nodes()];
        for (e, a) in net.arcs.iter().enumerate() {
            if f[e] < -FLOW_EPS {
                return Err(Error::Contract(format!("negative flow on arc {e}")));
            }
            excess[a.tail] += f[e];
            excess[a.head] -= f[e];
        }
        let (src, snk) = (net.client_source(k), net.client_sink(k));
        for (v, &x) in excess.iter().enumerate() {
            if v != src && v != snk && x.abs() > CONSERVATION_TOL {
                return Err(Error::Contract(format!(
                    "commodity {k} not conserved at node {v} (excess {x})"
                )));
            }
        }
        let mut out_adj = vec![Vec::new(); net.n_nodes()];
        for (e, a) in net.arcs.iter().enumerate() {
            if f[e] > FLOW_EPS {
                out_adj[a.tail].push(e);
            }
        }
        while let Some(path) = bfs_path(net, &out_adj, &f, src, snk) {
            let amount = path.iter().map(|&e| f[e]).fold(f64::INFINITY, f64::min);
            for &e in &path {
                f[e] -= amount;
                if f[e] <= FLOW_EPS {
                    f[e] = 0.0;
                }
            }
            let via = path
                .iter()
                .find_map(|&e| match net.arcs[e].kind {
                    ArcKind::Sink { i, .. } => Some(i),
                    _ => None,
                })
                .expect("source-sink path ends with a sink arc");
            paths.push(FlowPath { commodity: k, arcs: path, flow: amount, via });
        }
        // whatever is left is circulation or rounding dust
        cycle_flow[k] = f.iter().sum();
    }
    Ok(CommodityFlow { flows: flows.to_vec(), paths, cycle_flow, lp_rows: 0 })
}

fn bfs_path(net: &MfnNetwork, adj: &[Vec<usize>], f: &[f64], s: usize, t: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; net.n_nodes()];
    let mut seen = vec![false; net.n_nodes()];
    seen[s] = true;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        if v == t {
            break;
        }
        for &e in &adj[v] {
            let w = net.arcs[e].head;
            if f[e] > FLOW_EPS && !seen[w] {
                seen[w] = true;
                prev[w] = e;
                q.push_back(w);
            }
        }
    }
    if !seen[t] {
        return None;
    }
    let mut path = Vec::new();
    let mut v = t;
    while v != s {
        let e = prev[v];
        path.push(e);
        v = net.arcs[e].tail;
    }
    path.reverse();
    Some(path)
}

/// Checks constraint families (1)–(6) on the decomposed paths; returns a
/// description of each violation beyond `tol`.
pub fn check_constraints(net: &MfnNetwork, cf: &CommodityFlow, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    let mut on_arc = vec![0.0; net.arcs.len()];
    let mut served = vec![0.0; net.n_d];
    for p in &cf.paths {
        if p.flow < -tol {
            out.push(format!("(6) negative path flow {}", p.flow));
        }
        for &e in &p.arcs {
            on_arc[e] += p.flow;
        }
        served[p.commodity] += p.flow;
    }
    for j in 0..net.n_d {
        if served[j] < net.demand[j] - tol {
            out.push(format!("(1) client {j} receives {} < {}", served[j], net.demand[j]));
        }
    }
    for (e, a) in net.arcs.iter().enumerate() {
        if on_arc[e] > a.capacity + tol {
            let fam = match a.kind {
                ArcKind::Supply { .. } => "(2)",
                ArcKind::Return { .. } => "(3)",
                ArcKind::Facility { .. } => "(4)",
                ArcKind::Sink { .. } => "(5)",
            };
            out.push(format!("{fam} {:?} carries {} > {}", a.kind, on_arc[e], a.capacity));
        }
    }
    out
}
