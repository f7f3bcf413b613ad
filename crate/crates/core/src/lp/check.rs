//! Certificate checks recomputed from the original data.

use super::{LinearProgram, LpSolution, Relation, Sense};

pub(crate) fn reduced_costs(lp: &LinearProgram, duals: &[f64]) -> Vec<f64> {
    let mut d = lp.objective.clone();
    for (row, y) in lp.rows.iter().zip(duals) {
        for &(j, a) in &row.coeffs {
            d[j] -= y * a;
        }
    }
    d
}

/// Bound a variable with reduced cost `d` should sit at.
fn priced_bound(lp: &LinearProgram, j: usize, d: f64) -> f64 {
    let toward_lower = (d > 0.0) == (lp.sense == Sense::Minimize);
    if toward_lower {
        lp.lower[j]
    } else {
        lp.upper[j]
    }
}

/// `yᵀb + Σ_j d_j·bound_j`; `None` if a nonzero reduced cost points at an
/// infinite bound (dual infeasible beyond `tol`).
pub fn dual_objective(lp: &LinearProgram, sol: &LpSolution, tol: f64) -> Option<f64> {
    let mut v: f64 = lp.rows.iter().zip(&sol.duals).map(|(r, y)| r.rhs * y).sum();
    for (j, &d) in sol.reduced_costs.iter().enumerate() {
        if d.abs() <= tol {
            continue;
        }
        let b = priced_bound(lp, j, d);
        if !b.is_finite() {
            return None;
        }
        v += d * b;
    }
    Some(v)
}

/// Largest complementary-slackness product over rows and variables.
pub fn complementary_slackness(lp: &LinearProgram, sol: &LpSolution) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, y) in sol.duals.iter().enumerate() {
        let slack = lp.rows[r].rhs - lp.row_activity(r, &sol.primal);
        worst = worst.max(y.abs() * slack.abs());
    }
    for (j, &d) in sol.reduced_costs.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let b = priced_bound(lp, j, d);
        let dist = if b.is_finite() { (sol.primal[j] - b).abs() } else { f64::INFINITY };
        worst = worst.max(d.abs() * dist);
    }
    worst
}

/// Largest violation of a row or bound at `z`.
pub fn primal_violation(lp: &LinearProgram, z: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..lp.n_vars() {
        worst = worst.max(lp.lower[j] - z[j]).max(z[j] - lp.upper[j]);
    }
    for (r, row) in lp.rows.iter().enumerate() {
        let s = lp.row_activity(r, z) - row.rhs;
        worst = worst.max(match row.relation {
            Relation::Le => s,
            Relation::Ge => -s,
            Relation::Eq => s.abs(),
        });
    }
    worst
}

/// Rank of the constraints active at `z` (rows within `tol`, bounds within
/// `tol`). A vertex has rank equal to the number of variables.
pub fn basic_point_rank(lp: &LinearProgram, z: &[f64], tol: f64) -> usize {
    let n = lp.n_vars();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, row) in lp.rows.iter().enumerate() {
        if (lp.row_activity(r, z) - row.rhs).abs() <= tol {
            let mut v = vec![0.0; n];
            for &(j, a) in &row.coeffs {
                v[j] += a;
            }
            rows.push(v);
        }
    }
    for j in 0..n {
        if (z[j] - lp.lower[j]).abs() <= tol || (z[j] - lp.upper[j]).abs() <= tol {
            let mut v = vec![0.0; n];
            v[j] = 1.0;
            rows.push(v);
        }
    }
    rank(rows, n)
}

fn rank(mut rows: Vec<Vec<f64>>, n: usize) -> usize {
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..rows.len())
            .filter(|&i| rows[i][c].abs() > 1e-9)
            .max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs()))
        else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for row in rows.iter_mut().skip(r + 1) {
            let f = row[c] / pivot[c];
            if f != 0.0 {
                for k in c..n {
                    row[k] -= f * pivot[k];
                }
            }
        }
        r += 1;
    }
    r
}

/// `sup over the variable box of (Aᵀw)ᵀz`, treating components within
/// `tol` as zero; `None` if unbounded.
pub(crate) fn farkas_sup(lp: &LinearProgram, w: &[f64], tol: f64) -> Option<f64> {
    let mut g = vec![0.0; lp.n_vars()];
    for (row, wr) in lp.rows.iter().zip(w) {
        for &(j, a) in &row.coeffs {
            g[j] += wr * a;
        }
    }
    let mut sup = 0.0;
    for (j, gj) in g.into_iter().enumerate() {
        if gj.abs() <= tol {
            continue;
        }
        let b = if gj > 0.0 { lp.upper[j] } else { lp.lower[j] };
        if !b.is_finite() {
            return None;
        }
        sup += gj * b;
    }
    Some(sup)
}

/// `wᵀb − sup (Aᵀw)ᵀz`; positive means `w` certifies infeasibility.
/// Multipliers with the wrong sign for their row yield −∞.
pub fn farkas_margin(lp: &LinearProgram, w: &[f64]) -> f64 {
    for (row, &wr) in lp.rows.iter().zip(w) {
        let bad = match row.relation {
            Relation::Ge => wr < -1e-12,
            Relation::Le => wr > 1e-12,
            Relation::Eq => false,
        };
        if bad {
            return f64::NEG_INFINITY;
        }
    }
    match farkas_sup(lp, w, 1e-12) {
        Some(s) => lp.rows.iter().zip(w).map(|(r, wr)| r.rhs * wr).sum::<f64>() - s,
        None => f64::NEG_INFINITY,
    }
}
