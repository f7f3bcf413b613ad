use std::collections::VecDeque;

use super::{max_flow, FlowNetwork};

/// Fractional b-matching between clients (demand ≤ 1 each) and a facility
/// list; `h[k][j]` is the amount of client `j` matched to facility `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BMatching {
    pub h: Vec<Vec<f64>>,
    pub cap: Vec<Vec<f64>>,
    pub value: f64,
}

/// Maximum b-matching via max-flow: source → client (1), client → facility
/// (`cap[k][j]`), facility → sink (`u[k]`).
pub fn max_b_matching(cap: &[Vec<f64>], u: &[f64], n_d: usize) -> BMatching {
    let k = cap.len();
    let (s, t) = (n_d + k, n_d + k + 1);
    let mut net = FlowNetwork::new(n_d + k + 2);
    for j in 0..n_d {
        net.add_arc(s, j, 1.0, 0.0);
    }
    let mut edges = Vec::new();
    for (f, row) in cap.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0.0 {
                edges.push((f, j, net.add_arc(j, n_d + f, c, 0.0)));
            }
        }
    }
    for (f, &uf) in u.iter().enumerate() {
        net.add_arc(n_d + f, t, uf, 0.0);
    }
    let mf = max_flow(&net, s, t);
    let mut h = vec![vec![0.0; n_d]; k];
    for (f, j, a) in edges {
        h[f][j] = mf.flows[a].clamp(0.0, cap[f][j]);
    }
    BMatching { h, cap: cap.to_vec(), value: mf.value }
}

/// Vertices reached by alternating paths from partially-assigned clients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reach {
    pub facilities: Vec<bool>,
    pub clients: Vec<bool>,
    /// Clients with total matched amount below `1 − tol`.
    pub partial: Vec<bool>,
}

/// Breadth-first search from every partially-assigned client; client →
/// facility steps need `h < cap − tol`, facility → client steps `h > tol`.
pub fn alternating_reach(m: &BMatching, n_d: usize, tol: f64) -> Reach {
    let k = m.h.len();
    let partial: Vec<bool> = (0..n_d)
        .map(|j| m.h.iter().map(|row| row[j]).sum::<f64>() < 1.0 - tol)
        .collect();
    let mut clients = partial.clone();
    let mut facilities = vec![false; k];
    let mut q: VecDeque<usize> = (0..n_d).filter(|&j| partial[j]).collect();
    while let Some(j) = q.pop_front() {
        for f in 0..k {
            if facilities[f] || m.h[f][j] >= m.cap[f][j] - tol {
                continue;
            }
            facilities[f] = true;
            for (j2, seen) in clients.iter_mut().enumerate() {
                if !*seen && m.h[f][j2] > tol {
                    *seen = true;
                    q.push_back(j2);
                }
            }
        }
    }
    Reach { facilities, clients, partial }
}

/// Facility positions reachable by an augmenting path.
pub fn tightly_occupied(m: &BMatching, n_d: usize, tol: f64) -> Vec<usize> {
    let r = alternating_reach(m, n_d, tol);
    (0..m.h.len()).filter(|&f| r.facilities[f]).collect()
}
