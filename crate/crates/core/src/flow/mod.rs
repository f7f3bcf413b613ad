//! Max-flow, min-cost flow, integral assignment, fractional b-matching and
//! alternating-path reachability.

mod matching;
mod maxflow;
mod mincost;

pub use matching::{alternating_reach, max_b_matching, tightly_occupied, BMatching, Reach};
pub use maxflow::{max_flow, MaxFlow};
pub use mincost::{assign_min_cost, min_cost_assignment, min_cost_flow, MinCostFlow};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowNetwork {
    pub n: usize,
    pub arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork { n, arcs: Vec::new() }
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, capacity: f64, cost: f64) -> usize {
        debug_assert!(capacity >= 0.0 && capacity.is_finite());
        self.arcs.push(Arc { tail, head, capacity, cost });
        self.arcs.len() - 1
    }

    /// Net outflow at each node.
    pub fn excess(&self, flows: &[f64]) -> Vec<f64> {
        let mut e = vec![0.0; self.n];
        for (a, f) in self.arcs.iter().zip(flows) {
            e[a.tail] += f;
            e[a.head] -= f;
        }
        e
    }
}

/// Residual graph shared by the augmenting-path algorithms: arc `2k` is the
/// forward copy of input arc `k`, `2k + 1` its reverse.
pub(crate) struct Residual {
    pub head: Vec<usize>,
    pub cap: Vec<f64>,
    pub cost: Vec<f64>,
    pub adj: Vec<Vec<usize>>,
}

impl Residual {
    pub fn new(net: &FlowNetwork) -> Self {
        let mut r = Residual {
            head: Vec::with_capacity(2 * net.arcs.len()),
            cap: Vec::with_capacity(2 * net.arcs.len()),
            cost: Vec::with_capacity(2 * net.arcs.len()),
            adj: vec![Vec::new(); net.n],
        };
        for a in &net.arcs {
            r.adj[a.tail].push(r.head.len());
            r.head.push(a.head);
            r.cap.push(a.capacity);
            r.cost.push(a.cost);
            r.adj[a.head].push(r.head.len());
            r.head.push(a.tail);
            r.cap.push(0.0);
            r.cost.push(-a.cost);
        }
        r
    }

    pub fn push(&mut self, e: usize, amount: f64) {
        self.cap[e] -= amount;
        self.cap[e ^ 1] += amount;
    }

    /// Flow on each input arc.
    pub fn flows(&self, net: &FlowNetwork) -> Vec<f64> {
        (0..net.arcs.len()).map(|k| self.cap[2 * k + 1]).collect()
    }
}
