use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{FlowNetwork, Residual};
use crate::error::{Error, Result};
use crate::instances::{CflInstance, IntegralSolution};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MinCostFlow {
    pub value: f64,
    pub cost: f64,
    pub flows: Vec<f64>,
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Successive shortest paths with Johnson potentials. Sends up to `amount`
/// units from `s` to `t`; the returned value may fall short if the network
/// cannot carry it. The network must not contain negative-cost cycles.
pub fn min_cost_flow(net: &FlowNetwork, s: usize, t: usize, amount: f64) -> MinCostFlow {
    let mut res = Residual::new(net);
    let n = net.n;
    // Bellman-Ford for initial potentials (costs may be negative)
    let mut pot = vec![f64::INFINITY; n];
    pot[s] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for v in 0..n {
            if !pot[v].is_finite() {
                continue;
            }
            for &e in &res.adj[v] {
                let w = res.head[e];
                if res.cap[e] > EPS && pot[v] + res.cost[e] < pot[w] - EPS {
                    pot[w] = pot[v] + res.cost[e];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for p in pot.iter_mut() {
        if !p.is_finite() {
            *p = 0.0;
        }
    }
    let mut sent = 0.0;
    while amount - sent > EPS {
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        dist[s] = 0.0;
        let mut heap = BinaryHeap::from([Item(0.0, s)]);
        while let Some(Item(dv, v)) = heap.pop() {
            if dv > dist[v] {
                continue;
            }
            for &e in &res.adj[v] {
                let w = res.head[e];
                if res.cap[e] <= EPS {
                    continue;
                }
                let rc = (res.cost[e] + pot[v] - pot[w]).max(0.0);
                if dv + rc < dist[w] {
                    dist[w] = dv + rc;
                    prev[w] = e;
                    heap.push(Item(dist[w], w));
                }
            }
        }
        if !dist[t].is_finite() {
            break;
        }
        for v in 0..n {
            if dist[v].is_finite() {
                pot[v] += dist[v];
            }
        }
        let mut push = amount - sent;
        let mut v = t;
        while v != s {
            let e = prev[v];
            push = push.min(res.cap[e]);
            v = res.head[e ^ 1];
        }
        let mut v = t;
        while v != s {
            let e = prev[v];
            res.push(e, push);
            v = res.head[e ^ 1];
        }
        sent += push;
    }
    let flows = res.flows(net);
    let cost = net.arcs.iter().zip(&flows).map(|(a, f)| a.cost * f).sum();
    MinCostFlow { value: sent, cost, flows }
}

/// Assigns every client to one of the given facilities (`costs[k][j]` for
/// facility `k`) respecting integral capacities at minimum total cost.
/// Returns the chosen facility position per client and the cost.
pub fn assign_min_cost(caps: &[u64], costs: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n_d = costs.first().map_or(0, |r| r.len());
    let total: u64 = caps.iter().sum();
    if total < n_d as u64 {
        return Err(Error::Infeasible(format!(
            "capacity {total} cannot serve {n_d} clients"
        )));
    }
    let k = caps.len();
    let (src, sink) = (0, 1 + n_d + k);
    let mut net = FlowNetwork::new(sink + 1);
    for j in 0..n_d {
        net.add_arc(src, 1 + j, 1.0, 0.0);
    }
    let mut pair = Vec::new();
    for (f, row) in costs.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            pair.push((f, j, net.add_arc(1 + j, 1 + n_d + f, 1.0, c)));
        }
    }
    for (f, &u) in caps.iter().enumerate() {
        net.add_arc(1 + n_d + f, sink, u.min(n_d as u64) as f64, 0.0);
    }
    let mcf = min_cost_flow(&net, src, sink, n_d as f64);
    if mcf.value < n_d as f64 - 1e-9 {
        return Err(Error::Infeasible("assignment network saturated".into()));
    }
    let mut assign = vec![usize::MAX; n_d];
    for (f, j, a) in pair {
        if mcf.flows[a] > 0.5 {
            assign[j] = f;
        }
    }
    if assign.contains(&usize::MAX) {
        return Err(Error::InvariantViolation("non-integral assignment flow".into()));
    }
    let cost = assign.iter().enumerate().map(|(j, &f)| costs[f][j]).sum();
    Ok((assign, cost))
}

/// Min-cost assignment of all clients to the facilities in `open`.
pub fn min_cost_assignment(inst: &CflInstance, open: &[usize]) -> Result<IntegralSolution> {
    let mut open = open.to_vec();
    open.sort_unstable();
    open.dedup();
    let caps: Vec<u64> = open.iter().map(|&i| inst.facilities[i].capacity).collect();
    let costs: Vec<Vec<f64>> = open
        .iter()
        .map(|&i| (0..inst.n_clients).map(|j| inst.dist(i, j)).collect())
        .collect();
    if inst.n_clients == 0 {
        return Ok(IntegralSolution { open, assign: Vec::new() });
    }
    let (pos, _) = assign_min_cost(&caps, &costs)?;
    let assign = pos.into_iter().map(|k| open[k]).collect();
    Ok(IntegralSolution { open, assign })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_assignment() {
        let (a, c) = assign_min_cost(&[1, 1], &[vec![0.0, 9.0], vec![9.0, 0.0]]).unwrap();
        assert_eq!(a, vec![0, 1]);
        assert_eq!(c, 0.0);
    }

    #[test]
    fn single_facility_takes_both() {
        let (a, c) = assign_min_cost(&[2], &[vec![1.0, 2.0]]).unwrap();
        assert_eq!(a, vec![0, 0]);
        assert_eq!(c, 3.0);
    }

    #[test]
    fn insufficient_capacity() {
        assert!(matches!(
            assign_min_cost(&[1], &[vec![1.0, 2.0]]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn rerouting_through_reverse_arcs() {
        // greedy would put client 0 on facility 0 and strand client 1
        let (a, c) = assign_min_cost(&[1, 1], &[vec![1.0, 2.0], vec![2.0, 10.0]]).unwrap();
        assert_eq!(a, vec![1, 0]);
        assert_eq!(c, 4.0);
    }

    #[test]
    fn negative_costs_handled() {
        let mut n = FlowNetwork::new(3);
        n.add_arc(0, 1, 1.0, -2.0);
        n.add_arc(1, 2, 1.0, 1.0);
        n.add_arc(0, 2, 1.0, 0.5);
        let f = min_cost_flow(&n, 0, 2, 2.0);
        assert_eq!(f.value, 2.0);
        assert!((f.cost + 0.5).abs() < 1e-12);
    }
}
