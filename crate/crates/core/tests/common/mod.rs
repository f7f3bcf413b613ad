//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's solvers.
#![allow(dead_code, clippy::needless_range_loop)]

use cfl_rounding::flow::FlowNetwork;
use cfl_rounding::instances::{CflInstance, FractionalSolution};
use cfl_rounding::lp::{LinearProgram, Relation, Sense};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Solves `a·z = b` by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &k| a[i][c].abs().total_cmp(&a[k][c].abs()))?;
        if a[p][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, f);
            cur.pop();
        }
    }
    rec(0, m, k, &mut Vec::new(), f);
}

/// Best objective over all vertices, or `None` when no vertex is feasible.
/// All variable bounds must be finite.
pub fn vertex_opt(lp: &LinearProgram) -> Option<f64> {
    let n = lp.objective.len();
    assert!(lp.lower.iter().chain(&lp.upper).all(|v| v.is_finite()));
    // every hyperplane as a dense (coeffs, rhs)
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.coeffs {
            a[j] += v;
        }
        planes.push((a, r.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let feasible = |z: &[f64]| {
        let tol = 1e-7;
        (0..n).all(|j| z[j] >= lp.lower[j] - tol && z[j] <= lp.upper[j] + tol)
            && lp.rows.iter().all(|r| {
                let s: f64 = r.coeffs.iter().map(|&(j, v)| v * z[j]).sum::<f64>() - r.rhs;
                match r.relation {
                    Relation::Le => s <= tol,
                    Relation::Ge => s >= -tol,
                    Relation::Eq => s.abs() <= tol,
                }
            })
    };
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |pick| {
        let a = pick.iter().map(|&k| planes[k].0.clone()).collect();
        let b = pick.iter().map(|&k| planes[k].1).collect();
        if let Some(z) = solve_square(a, b) {
            if feasible(&z) {
                let v: f64 = lp.objective.iter().zip(&z).map(|(c, x)| c * x).sum();
                best = Some(match (best, lp.sense) {
                    (None, _) => v,
                    (Some(b), Sense::Minimize) => b.min(v),
                    (Some(b), Sense::Maximize) => b.max(v),
                });
            }
        }
    });
    best
}

/// Random bounded LP with `n ≤ 6` variables and a few mixed rows.
pub fn random_lp(seed: u64) -> LinearProgram {
    let mut r = rng(seed);
    let n = r.gen_range(1..=6);
    let m = r.gen_range(1..=5);
    let sense = if r.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut lp = LinearProgram::new(sense);
    for _ in 0..n {
        let lo = f64::from(r.gen_range(-3..=1));
        let hi = lo + f64::from(r.gen_range(1..=5));
        lp.add_var(lo, hi, f64::from(r.gen_range(-5..=5)));
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            let v = f64::from(r.gen_range(-4..=4));
            if r.gen_bool(0.7) && v != 0.0 {
                coeffs.push((j, v));
            }
        }
        let rel = match r.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Le,
            _ => Relation::Ge,
        };
        lp.add_row(coeffs, rel, f64::from(r.gen_range(-6..=6)));
    }
    lp
}

/// Minimum `s`-`t` cut by enumerating every node subset.
pub fn min_cut_enum(net: &FlowNetwork, s: usize, t: usize) -> f64 {
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << net.n) {
        let side = |v: usize| mask >> v & 1 == 1;
        if !side(s) || side(t) {
            continue;
        }
        let cut: f64 = net.arcs.iter().filter(|a| side(a.tail) && !side(a.head)).map(|a| a.capacity).sum();
        best = best.min(cut);
    }
    best
}

/// Cheapest capacity-respecting assignment of all clients to `open`, by
/// trying every map from clients to open facilities.
pub fn exhaustive_assignment(inst: &CflInstance, open: &[usize]) -> Option<f64> {
    let n_d = inst.n_clients;
    let k = open.len();
    if k == 0 {
        return if n_d == 0 { Some(0.0) } else { None };
    }
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n_d];
    loop {
        let mut load = vec![0u64; k];
        for &p in &pick {
            load[p] += 1;
        }
        if (0..k).all(|p| load[p] <= inst.facilities[open[p]].capacity) {
            let c: f64 = pick.iter().enumerate().map(|(j, &p)| inst.dist(open[p], j)).sum();
            best = Some(best.map_or(c, |b: f64| b.min(c)));
        }
        let mut pos = 0;
        loop {
            if pos == n_d {
                return best;
            }
            pick[pos] += 1;
            if pick[pos] < k {
                break;
            }
            pick[pos] = 0;
            pos += 1;
        }
    }
}

/// Every integral feasible `(x, y)`: each client assigned to one open
/// facility within capacity, any superset of the used facilities open.
pub fn integral_solutions(inst: &CflInstance) -> Vec<FractionalSolution> {
    let (n_f, n_d) = (inst.n_facilities(), inst.n_clients);
    let mut out = Vec::new();
    let total = n_f.pow(n_d as u32);
    for code in 0..total {
        let mut c = code;
        let assign: Vec<usize> = (0..n_d)
            .map(|_| {
                let i = c % n_f;
                c /= n_f;
                i
            })
            .collect();
        let mut load = vec![0u64; n_f];
        for &i in &assign {
            load[i] += 1;
        }
        if (0..n_f).any(|i| load[i] > inst.facilities[i].capacity) {
            continue;
        }
        for mask in 0u32..(1 << n_f) {
            if (0..n_f).any(|i| load[i] > 0 && mask >> i & 1 == 0) {
                continue;
            }
            let y = (0..n_f).map(|i| f64::from(mask >> i & 1)).collect();
            let mut x = vec![vec![0.0; n_d]; n_f];
            for (j, &i) in assign.iter().enumerate() {
                x[i][j] = 1.0;
            }
            out.push(FractionalSolution { y, x });
        }
    }
    out
}

/// `Σ o_i y_i + Σ c_ij x_ij`, computed directly from the metric.
pub fn psi(inst: &CflInstance, s: &FractionalSolution) -> f64 {
    let n_f = inst.n_facilities();
    let mut v = 0.0;
    for i in 0..n_f {
        v += inst.facilities[i].open_cost * s.y[i];
        for j in 0..inst.n_clients {
            v += inst.metric[i][n_f + j] * s.x[i][j];
        }
    }
    v
}

/// Feasibility of an integral solution checked from scratch.
pub fn integral_feasible(inst: &CflInstance, open: &[usize], assign: &[usize]) -> bool {
    let mut load = vec![0u64; inst.n_facilities()];
    for &i in assign {
        if !open.contains(&i) {
            return false;
        }
        load[i] += 1;
    }
    assign.len() == inst.n_clients && (0..inst.n_facilities()).all(|i| load[i] <= inst.facilities[i].capacity)
}

/// Integral cost recomputed from the metric.
pub fn integral_cost(inst: &CflInstance, open: &[usize], assign: &[usize]) -> f64 {
    let n_f = inst.n_facilities();
    open.iter().map(|&i| inst.facilities[i].open_cost).sum::<f64>()
        + assign.iter().enumerate().map(|(j, &i)| inst.metric[i][n_f + j]).sum::<f64>()
}

/// Duality checks recomputed from the row duals alone: `(gap, cs, sign)`
/// where `sign` is the worst dual sign violation.
pub fn duality_residuals(lp: &LinearProgram, z: &[f64], y: &[f64], objective: f64) -> (f64, f64, f64) {
    let n = lp.objective.len();
    let flip = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let mut d = lp.objective.clone();
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            d[j] -= y[r] * v;
        }
    }
    let mut dual = 0.0;
    let (mut cs, mut sign) = (0.0f64, 0.0f64);
    for (r, row) in lp.rows.iter().enumerate() {
        dual += y[r] * row.rhs;
        let act: f64 = row.coeffs.iter().map(|&(j, v)| v * z[j]).sum();
        cs = cs.max((y[r] * (act - row.rhs)).abs());
        let yy = flip * y[r];
        sign = sign.max(match row.relation {
            Relation::Ge => -yy,
            Relation::Le => yy,
            Relation::Eq => 0.0,
        });
    }
    for j in 0..n {
        // priced at the bound the reduced cost pushes toward
        let dd = flip * d[j];
        let b = if dd > 0.0 { lp.lower[j] } else { lp.upper[j] };
        dual += d[j] * b;
        cs = cs.max((d[j] * (z[j] - b)).abs());
    }
    ((dual - objective).abs(), cs, sign)
}
