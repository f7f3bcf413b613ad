//! Generic tableau core. Internally every column has lower bound 0 and an
//! optional upper bound; each row gets an artificial column whose tableau
//! column is the matching column of B⁻¹, which is where duals and the
//! Farkas multipliers are read from.

use num_rational::BigRational;

use super::scalar::Scalar;
use super::{
    check, ExactSolution, LinearProgram, LpSolution, LpStatus, Relation, RowStatus, Sense,
    SolveOptions, VarStatus,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic,
    Lower,
    Upper,
}

enum Map<T> {
    /// z = shift + col
    Shift(usize, T),
    /// z = upper − col
    Negate(usize, T),
    /// z = pos − neg
    Split(usize, usize),
}

enum Step<T> {
    Flip,
    Pivot { row: usize, theta: T, to_upper: bool },
    Unbounded,
}

pub(super) struct Raw<T> {
    status: LpStatus,
    objective: T,
    primal: Vec<T>,
    duals: Vec<T>,
    var_status: Vec<VarStatus>,
    row_status: Vec<RowStatus>,
    farkas: Option<Vec<T>>,
    pivots: usize,
}

impl Raw<f64> {
    pub(super) fn into_f64(self, lp: &LinearProgram) -> LpSolution {
        LpSolution {
            status: self.status,
            objective: self.objective,
            reduced_costs: check::reduced_costs(lp, &self.duals),
            primal: self.primal,
            duals: self.duals,
            var_status: self.var_status,
            row_status: self.row_status,
            farkas: self.farkas,
            pivots: self.pivots,
        }
    }
}

impl Raw<BigRational> {
    pub(super) fn into_exact(self) -> ExactSolution {
        ExactSolution {
            status: self.status,
            objective: self.objective,
            primal: self.primal,
            duals: self.duals,
            var_status: self.var_status,
            row_status: self.row_status,
            farkas: self.farkas,
            pivots: self.pivots,
        }
    }
}

struct Core<T> {
    m: usize,
    n: usize,
    art0: usize,
    cols: Vec<Vec<(usize, T)>>,
    b: Vec<T>,
    upper: Vec<Option<T>>,
    tab: Vec<T>,
    beta: Vec<T>,
    basis: Vec<usize>,
    pos: Vec<Pos>,
    cost: Vec<T>,
    d: Vec<T>,
    pivots: usize,
    tol: f64,
}

impl<T: Scalar> Core<T> {
    fn at(&self, r: usize, j: usize) -> &T {
        &self.tab[r * self.n + j]
    }

    fn fixed_at_zero(&self, j: usize) -> bool {
        matches!(&self.upper[j], Some(u) if u.is_zero())
    }

    fn value(&self, j: usize, row_of: &[Option<usize>]) -> T {
        match self.pos[j] {
            Pos::Basic => self.beta[row_of[j].expect("basic column has a row")].clone(),
            Pos::Lower => T::zero(),
            Pos::Upper => self.upper[j].clone().expect("upper bound"),
        }
    }

    fn row_of(&self) -> Vec<Option<usize>> {
        let mut r = vec![None; self.n];
        for (i, &j) in self.basis.iter().enumerate() {
            r[j] = Some(i);
        }
        r
    }

    fn compute_d(&mut self) {
        for j in 0..self.n {
            let mut v = self.cost[j].clone();
            for i in 0..self.m {
                let c = &self.cost[self.basis[i]];
                if !c.is_zero() {
                    v.sub_mul(c, self.at(i, j));
                }
            }
            self.d[j] = v;
        }
        for &j in &self.basis {
            self.d[j] = T::zero();
        }
    }

    /// β = B⁻¹(b − Σ_{j at upper} u_j A_j).
    fn recompute_beta(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.n {
            if self.pos[j] == Pos::Upper {
                let u = self.upper[j].clone().expect("upper bound");
                for (r, a) in &self.cols[j] {
                    rhs[*r].sub_mul(a, &u);
                }
            }
        }
        for i in 0..self.m {
            let mut v = T::zero();
            for (r, q) in rhs.iter().enumerate() {
                if !q.is_zero() {
                    v = v.add(&self.at(i, self.art0 + r).mul(q));
                }
            }
            self.beta[i] = v;
        }
    }

    /// Rebuilds the tableau from the original columns; skipped if the basis
    /// matrix looks singular.
    fn reinvert(&mut self) {
        let m = self.m;
        if m == 0 {
            return;
        }
        let mut bm = vec![T::zero(); m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for (r, a) in &self.cols[j] {
                bm[*r * m + k] = bm[*r * m + k].add(a);
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        for c in 0..m {
            let mut p = c;
            for r in c + 1..m {
                if bm[r * m + c].abs() > bm[p * m + c].abs() {
                    p = r;
                }
            }
            if !bm[p * m + c].abs().pos(1e-11) {
                return;
            }
            if p != c {
                for k in 0..m {
                    bm.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let piv = bm[c * m + c].clone();
            for k in 0..m {
                bm[c * m + k] = bm[c * m + k].div(&piv);
                inv[c * m + k] = inv[c * m + k].div(&piv);
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = bm[r * m + c].clone();
                if f.is_zero() {
                    continue;
                }
                for k in 0..m {
                    let (bv, iv) = (bm[c * m + k].clone(), inv[c * m + k].clone());
                    bm[r * m + k].sub_mul(&f, &bv);
                    inv[r * m + k].sub_mul(&f, &iv);
                }
            }
        }
        for j in 0..self.n {
            for i in 0..m {
                let mut v = T::zero();
                for (r, a) in &self.cols[j] {
                    v = v.add(&inv[i * m + *r].mul(a));
                }
                self.tab[i * self.n + j] = v;
            }
        }
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.tab[i * self.n + j] = if i == k { T::one() } else { T::zero() };
            }
        }
        self.recompute_beta();
        self.compute_d();
    }

    fn price(&self, bland: bool) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        for j in 0..self.art0 {
            let inc = match self.pos[j] {
                Pos::Basic => continue,
                Pos::Lower if self.fixed_at_zero(j) => continue,
                Pos::Lower if self.d[j].neg_tol(self.tol) => true,
                Pos::Upper if self.d[j].pos(self.tol) => false,
                _ => continue,
            };
            if bland {
                return Some((j, inc));
            }
            match best {
                Some((b, _)) if self.d[j].abs() <= self.d[b].abs() => {}
                _ => best = Some((j, inc)),
            }
        }
        best
    }

    fn ratio(&self, q: usize, inc: bool, bland: bool) -> Step<T> {
        let mut cands: Vec<(usize, T, bool, T)> = Vec::new();
        for r in 0..self.m {
            let a = self.at(r, q);
            let rho = if inc { a.clone() } else { a.neg() };
            let (theta, to_upper) = if rho.pos(self.tol) {
                (self.beta[r].div(&rho), false)
            } else if rho.neg_tol(self.tol) {
                match &self.upper[self.basis[r]] {
                    Some(u) => (u.sub(&self.beta[r]).div(&rho.neg()), true),
                    None => continue,
                }
            } else {
                continue;
            };
            let theta = if theta.neg_tol(0.0) { T::zero() } else { theta };
            cands.push((r, theta, to_upper, rho.abs()));
        }
        let row_min = cands.iter().map(|c| &c.1).fold(None::<&T>, |m, t| match m {
            Some(v) if v <= t => Some(v),
            _ => Some(t),
        });
        if let Some(u) = &self.upper[q] {
            if row_min.is_none_or(|t| u <= t) {
                return Step::Flip;
            }
        }
        let Some(tmin) = row_min.cloned() else {
            return Step::Unbounded;
        };
        let tie = 1e-12 * (1.0 + tmin.to_f64().abs());
        let mut pick: Option<&(usize, T, bool, T)> = None;
        for c in cands.iter().filter(|c| !c.1.sub(&tmin).pos(tie)) {
            pick = match pick {
                None => Some(c),
                Some(p) => {
                    let better = if bland {
                        self.basis[c.0] < self.basis[p.0]
                    } else {
                        c.3 > p.3 || (c.3 == p.3 && self.basis[c.0] < self.basis[p.0])
                    };
                    if better {
                        Some(c)
                    } else {
                        Some(p)
                    }
                }
            };
        }
        let c = pick.expect("tie set contains the minimum");
        Step::Pivot { row: c.0, theta: c.1.clone(), to_upper: c.2 }
    }

    /// Moves column `q` by `delta` (signed), updating basic values.
    fn shift_basics(&mut self, q: usize, delta: &T) {
        for i in 0..self.m {
            let a = self.tab[i * self.n + q].clone();
            self.beta[i].sub_mul(&a, delta);
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let piv = self.tab[r * n + q].clone();
        let mut nz = Vec::new();
        for j in 0..n {
            let v = &mut self.tab[r * n + j];
            if !v.is_zero() {
                *v = v.div(&piv);
                nz.push(j);
            }
        }
        self.tab[r * n + q] = T::one();
        let rowr: Vec<T> = nz.iter().map(|&j| self.tab[r * n + j].clone()).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * n + q].clone();
            if f.is_zero() {
                continue;
            }
            for (k, &j) in nz.iter().enumerate() {
                self.tab[i * n + j].sub_mul(&f, &rowr[k]);
            }
            self.tab[i * n + q] = T::zero();
        }
        let f = self.d[q].clone();
        if !f.is_zero() {
            for (k, &j) in nz.iter().enumerate() {
                self.d[j].sub_mul(&f, &rowr[k]);
            }
        }
        self.d[q] = T::zero();
    }

    fn enter(&mut self, r: usize, q: usize, delta: T, to_upper: bool) {
        self.shift_basics(q, &delta);
        let old = match self.pos[q] {
            Pos::Upper => self.upper[q].clone().expect("upper bound"),
            _ => T::zero(),
        };
        let leaving = self.basis[r];
        self.pos[leaving] = if to_upper { Pos::Upper } else { Pos::Lower };
        self.beta[r] = old.add(&delta);
        self.basis[r] = q;
        self.pos[q] = Pos::Basic;
        self.pivot(r, q);
    }

    /// Returns false when the objective is unbounded.
    fn optimize(&mut self, dantzig: usize, max_pivots: usize) -> Result<bool> {
        let start = self.pivots;
        loop {
            if self.pivots >= max_pivots {
                return Err(Error::SolverFailure(format!(
                    "pivot budget of {max_pivots} exhausted"
                )));
            }
            let bland = self.pivots - start >= dantzig;
            let Some((q, inc)) = self.price(bland) else {
                return Ok(true);
            };
            match self.ratio(q, inc, bland) {
                Step::Unbounded => return Ok(false),
                Step::Flip => {
                    let u = self.upper[q].clone().expect("flip needs a bound");
                    let delta = if inc { u } else { u.neg() };
                    self.shift_basics(q, &delta);
                    self.pos[q] = if inc { Pos::Upper } else { Pos::Lower };
                }
                Step::Pivot { row, theta, to_upper } => {
                    let delta = if inc { theta } else { theta.neg() };
                    self.enter(row, q, delta, to_upper);
                }
            }
            self.pivots += 1;
            if !T::EXACT && self.pivots.is_multiple_of(100) {
                self.reinvert();
            }
        }
    }

    /// y = c_Bᵀ B⁻¹ for the current cost vector.
    fn row_prices(&self) -> Vec<T> {
        (0..self.m)
            .map(|r| {
                let mut v = T::zero();
                for i in 0..self.m {
                    let c = &self.cost[self.basis[i]];
                    if !c.is_zero() {
                        v = v.add(&c.mul(self.at(i, self.art0 + r)));
                    }
                }
                v
            })
            .collect()
    }
}

pub(super) fn run<T: Scalar>(lp: &LinearProgram, opts: &SolveOptions) -> Result<Raw<T>> {
    let sgn = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut maps = Vec::with_capacity(lp.n_vars());
    let mut upper: Vec<Option<T>> = Vec::new();
    let mut icost: Vec<T> = Vec::new();
    for j in 0..lp.n_vars() {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let c = T::from_f64(sgn * lp.objective[j]);
        let col = upper.len();
        if l.is_finite() {
            let lt = T::from_f64(l);
            upper.push(u.is_finite().then(|| T::from_f64(u).sub(&lt)));
            icost.push(c);
            maps.push(Map::Shift(col, lt));
        } else if u.is_finite() {
            upper.push(None);
            icost.push(c.neg());
            maps.push(Map::Negate(col, T::from_f64(u)));
        } else {
            upper.push(None);
            upper.push(None);
            icost.push(c.clone());
            icost.push(c.neg());
            maps.push(Map::Split(col, col + 1));
        }
    }
    let n_struct = upper.len();
    let m = lp.rows.len();
    let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_struct];
    let mut b = Vec::with_capacity(m);
    let mut flip = Vec::with_capacity(m);
    let mut slack_of = vec![None; m];
    let mut slack_cols: Vec<(usize, T)> = Vec::new();
    for (r, row) in lp.rows.iter().enumerate() {
        let mut coeffs = row.coeffs.clone();
        coeffs.sort_by_key(|c| c.0);
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, a) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        let mut rhs = T::from_f64(row.rhs);
        let mut entries: Vec<(usize, T)> = Vec::new();
        for (j, a) in merged {
            if a == 0.0 {
                continue;
            }
            let a = T::from_f64(a);
            match &maps[j] {
                Map::Shift(c, l) => {
                    rhs.sub_mul(&a, l);
                    entries.push((*c, a));
                }
                Map::Negate(c, u) => {
                    rhs.sub_mul(&a, u);
                    entries.push((*c, a.neg()));
                }
                Map::Split(p, q) => {
                    entries.push((*q, a.neg()));
                    entries.push((*p, a));
                }
            }
        }
        let flipped = rhs.neg_tol(0.0);
        let s = |v: T| if flipped { v.neg() } else { v };
        for (c, a) in entries {
            cols[c].push((r, s(a)));
        }
        match row.relation {
            Relation::Le => slack_cols.push((r, s(T::one()))),
            Relation::Ge => slack_cols.push((r, s(T::one().neg()))),
            Relation::Eq => {}
        }
        b.push(s(rhs));
        flip.push(flipped);
    }
    for (r, a) in slack_cols {
        slack_of[r] = Some(cols.len());
        cols.push(vec![(r, a)]);
        upper.push(None);
        icost.push(T::zero());
    }
    let art0 = cols.len();
    for r in 0..m {
        cols.push(vec![(r, T::one())]);
        upper.push(None);
        icost.push(T::zero());
    }
    let n = cols.len();
    let mut tab = vec![T::zero(); m * n];
    for (j, col) in cols.iter().enumerate() {
        for (r, a) in col {
            tab[r * n + j] = tab[r * n + j].add(a);
        }
    }
    let mut basis = Vec::with_capacity(m);
    let mut pos = vec![Pos::Lower; n];
    for r in 0..m {
        let j = match slack_of[r] {
            Some(s) if cols[s][0].1 > T::zero() => s,
            _ => art0 + r,
        };
        basis.push(j);
        pos[j] = Pos::Basic;
    }
    for r in 0..m {
        if pos[art0 + r] != Pos::Basic {
            upper[art0 + r] = Some(T::zero());
        }
    }
    let mut cost = vec![T::zero(); n];
    for c in cost.iter_mut().skip(art0) {
        *c = T::one();
    }
    let mut core = Core {
        m,
        n,
        art0,
        cols,
        beta: b.clone(),
        b,
        upper,
        tab,
        basis,
        pos,
        d: vec![T::zero(); n],
        cost,
        pivots: 0,
        tol: if T::EXACT { 0.0 } else { opts.tol },
    };
    let size = m + n;
    let dantzig = opts.dantzig_pivots.unwrap_or(20 * size + 100);
    let max_pivots = opts.max_pivots.unwrap_or(dantzig + 200 * size + 1000);
    core.compute_d();
    core.optimize(dantzig, max_pivots)?;
    if !T::EXACT && core.pivots > 0 {
        core.reinvert();
    }

    let mut infeas = T::zero();
    for (i, &j) in core.basis.iter().enumerate() {
        if j >= art0 {
            infeas = infeas.add(&core.beta[i]);
        }
    }
    let infeasible = if T::EXACT {
        infeas.pos(0.0)
    } else {
        infeas.pos(opts.infeasibility_tol)
    };
    if infeasible {
        let y1 = core.row_prices();
        let farkas = y1
            .into_iter()
            .zip(&flip)
            .map(|(v, &f)| if f { v.neg() } else { v })
            .collect();
        return Ok(finish(lp, &core, &maps, &flip, &slack_of, LpStatus::Infeasible, Some(farkas), sgn));
    }

    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if core.basis[r] < art0 {
            continue;
        }
        let mut best: Option<usize> = None;
        for j in 0..art0 {
            if core.pos[j] == Pos::Basic || !core.at(r, j).abs().pos(core.tol) {
                continue;
            }
            if best.is_none_or(|b| core.at(r, j).abs() > core.at(r, b).abs()) {
                best = Some(j);
            }
        }
        if let Some(q) = best {
            let delta = core.beta[r].div(core.at(r, q));
            core.enter(r, q, delta, false);
            core.pivots += 1;
        }
    }
    for r in 0..m {
        core.upper[art0 + r] = Some(T::zero());
    }
    for j in 0..n {
        core.cost[j] = if j < n_struct { icost[j].clone() } else { T::zero() };
    }
    core.compute_d();
    let bounded = core.optimize(dantzig, core.pivots + max_pivots)?;
    if !T::EXACT && core.pivots > 0 {
        core.reinvert();
    }
    let status = if bounded { LpStatus::Optimal } else { LpStatus::Unbounded };
    Ok(finish(lp, &core, &maps, &flip, &slack_of, status, None, sgn))
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    lp: &LinearProgram,
    core: &Core<T>,
    maps: &[Map<T>],
    flip: &[bool],
    slack_of: &[Option<usize>],
    status: LpStatus,
    farkas: Option<Vec<T>>,
    sgn: f64,
) -> Raw<T> {
    let row_of = core.row_of();
    let val = |j: usize| core.value(j, &row_of);
    let primal: Vec<T> = maps
        .iter()
        .map(|m| match m {
            Map::Shift(c, l) => l.add(&val(*c)),
            Map::Negate(c, u) => u.sub(&val(*c)),
            Map::Split(p, q) => val(*p).sub(&val(*q)),
        })
        .collect();
    let var_status = maps
        .iter()
        .map(|m| match m {
            Map::Shift(c, _) => match core.pos[*c] {
                Pos::Basic => VarStatus::Basic,
                Pos::Lower => VarStatus::AtLower,
                Pos::Upper => VarStatus::AtUpper,
            },
            Map::Negate(c, _) => match core.pos[*c] {
                Pos::Basic => VarStatus::Basic,
                _ => VarStatus::AtUpper,
            },
            Map::Split(p, q) => {
                if core.pos[*p] == Pos::Basic || core.pos[*q] == Pos::Basic {
                    VarStatus::Basic
                } else {
                    VarStatus::FreeZero
                }
            }
        })
        .collect();
    let row_status = (0..core.m)
        .map(|r| {
            let basic = core.pos[core.art0 + r] == Pos::Basic
                || slack_of[r].is_some_and(|s| core.pos[s] == Pos::Basic);
            if basic {
                RowStatus::Basic
            } else {
                RowStatus::Tight
            }
        })
        .collect();
    let duals = if status == LpStatus::Optimal {
        let sign = T::from_f64(sgn);
        core.row_prices()
            .into_iter()
            .zip(flip)
            .map(|(v, &f)| {
                let v = v.mul(&sign);
                if f {
                    v.neg()
                } else {
                    v
                }
            })
            .collect()
    } else {
        vec![T::zero(); core.m]
    };
    let mut objective = T::zero();
    for (j, z) in primal.iter().enumerate() {
        objective = objective.add(&T::from_f64(lp.objective[j]).mul(z));
    }
    Raw {
        status,
        objective,
        primal,
        duals,
        var_status,
        row_status,
        farkas,
        pivots: core.pivots,
    }
}
