use std::collections::VecDeque;

use super::{FlowNetwork, Residual};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    pub flows: Vec<f64>,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

/// Dinic's algorithm.
pub fn max_flow(net: &FlowNetwork, s: usize, t: usize) -> MaxFlow {
    let mut res = Residual::new(net);
    let mut value = 0.0;
    if s != t {
        loop {
            let level = bfs_levels(&res, s);
            if level[t] == usize::MAX {
                break;
            }
            let mut next = vec![0usize; net.n];
            loop {
                let pushed = augment(&mut res, &level, &mut next, s, t, f64::INFINITY);
                if pushed <= EPS {
                    break;
                }
                value += pushed;
            }
        }
    }
    let level = bfs_levels(&res, s);
    MaxFlow {
        value,
        flows: res.flows(net),
        source_side: level.iter().map(|&l| l != usize::MAX).collect(),
    }
}

fn bfs_levels(res: &Residual, s: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; res.adj.len()];
    level[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &e in &res.adj[v] {
            let w = res.head[e];
            if res.cap[e] > EPS && level[w] == usize::MAX {
                level[w] = level[v] + 1;
                q.push_back(w);
            }
        }
    }
    level
}

fn augment(
    res: &mut Residual,
    level: &[usize],
    next: &mut [usize],
    v: usize,
    t: usize,
    limit: f64,
) -> f64 {
    if v == t {
        return limit;
    }
    while next[v] < res.adj[v].len() {
        let e = res.adj[v][next[v]];
        let w = res.head[e];
        if res.cap[e] > EPS && level[w] == level[v] + 1 {
            let got = augment(res, level, next, w, t, limit.min(res.cap[e]));
            if got > EPS {
                res.push(e, got);
                return got;
            }
        }
        next[v] += 1;
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_arc() {
        let mut n = FlowNetwork::new(2);
        n.add_arc(0, 1, 3.0, 0.0);
        assert_eq!(max_flow(&n, 0, 1).value, 3.0);
    }

    #[test]
    fn parallel_paths() {
        let mut n = FlowNetwork::new(4);
        n.add_arc(0, 1, 1.0, 0.0);
        n.add_arc(1, 3, 5.0, 0.0);
        n.add_arc(0, 2, 2.0, 0.0);
        n.add_arc(2, 3, 5.0, 0.0);
        let f = max_flow(&n, 0, 3);
        assert_eq!(f.value, 3.0);
        let e = n.excess(&f.flows);
        assert!(e[1].abs() < 1e-12 && e[2].abs() < 1e-12);
        assert_eq!(f.source_side, vec![true, false, false, false]);
    }
}
