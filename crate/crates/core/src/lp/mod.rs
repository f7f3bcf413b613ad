//! Dense two-phase bounded-variable primal simplex.
//!
//! Produces primal values, row duals, reduced costs and basis tags on
//! optimality, and a Farkas certificate on infeasibility. Rows may carry an
//! affine description of their right-hand side in external parameters so a
//! certificate can be turned into a cut over those parameters.
//!
//! Dual sign convention: with Lagrangian `cᵀz − yᵀ(Az − b)`, a minimization
//! has `y ≥ 0` on `≥` rows and `y ≤ 0` on `≤` rows (reversed when
//! maximizing), and reduced costs are `d = c − Aᵀy`.

mod check;
mod scalar;
mod simplex;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use check::{
    basic_point_rank, complementary_slackness, dual_objective, farkas_margin, primal_violation,
};
pub use scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `constant + Σ coeff·p[index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineForm {
    pub fn constant(c: f64) -> Self {
        AffineForm { constant: c, terms: Vec::new() }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(k, a)| a * p[k]).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub rhs_form: Option<AffineForm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
    /// Dimension of the parameter space used by `rhs_form`s.
    pub n_params: usize,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
            n_params: 0,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, relation, rhs, rhs_form: None });
        self.rows.len() - 1
    }

    /// Row whose right-hand side is `form` evaluated at `params`.
    pub fn add_param_row(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        form: AffineForm,
        params: &[f64],
    ) -> usize {
        let rhs = form.eval(params);
        self.rows.push(Row { coeffs, relation, rhs, rhs_form: Some(form) });
        self.rows.len() - 1
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective.iter().zip(z).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, r: usize, z: &[f64]) -> f64 {
        self.rows[r].coeffs.iter().map(|&(j, a)| a * z[j]).sum()
    }

    fn check_well_formed(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Contract("bounds and objective lengths differ".into()));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::Contract(format!("variable {j}: bad bounds [{l}, {u}]")));
            }
            if !self.objective[j].is_finite() {
                return Err(Error::Contract(format!("variable {j}: non-finite cost")));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::Contract(format!("row {r}: non-finite rhs")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(Error::Contract(format!("row {r}: bad coefficient on {j}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable sitting at zero.
    FreeZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowStatus {
    /// Slack (or redundant artificial) is basic.
    Basic,
    Tight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub var_status: Vec<VarStatus>,
    pub row_status: Vec<RowStatus>,
    /// Row multipliers proving infeasibility: `≥ 0` on `≥` rows, `≤ 0` on
    /// `≤` rows, with `sup over bounds of (Aᵀw)ᵀz < wᵀb`.
    pub farkas: Option<Vec<f64>>,
    pub pivots: usize,
}

/// Exact-rational counterpart of [`LpSolution`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub status: LpStatus,
    pub objective: BigRational,
    pub primal: Vec<BigRational>,
    pub duals: Vec<BigRational>,
    pub var_status: Vec<VarStatus>,
    pub row_status: Vec<RowStatus>,
    pub farkas: Option<Vec<BigRational>>,
    pub pivots: usize,
}

/// Inequality `coeffs · p ≥ rhs` over a parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Hyperplane {
    pub fn lhs(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(a, v)| a * v).sum()
    }

    /// Positive when `p` violates the inequality.
    pub fn violation(&self, p: &[f64]) -> f64 {
        self.rhs - self.lhs(p)
    }

    /// Removes coefficients below `rel` times the largest one, keeping
    /// validity on the box `[0, 1]`.
    pub fn sparsify(&mut self, rel: f64) {
        let big = self.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        for a in self.coeffs.iter_mut() {
            if a.abs() < rel * big {
                // a·p ranges over [min(a,0), max(a,0)] on the box
                if *a > 0.0 {
                    self.rhs -= *a;
                }
                *a = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Pivot, pricing and ratio tolerance.
    pub tol: f64,
    /// Phase-one objective above which the LP is declared infeasible.
    pub infeasibility_tol: f64,
    /// Dantzig pivots before switching to Bland's rule; `None` scales with size.
    pub dantzig_pivots: Option<usize>,
    /// Total pivot budget; `None` scales with size.
    pub max_pivots: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            infeasibility_tol: 1e-9,
            dantzig_pivots: None,
            max_pivots: None,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &SolveOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution> {
    lp.check_well_formed()?;
    let raw = simplex::run::<f64>(lp, opts)?;
    Ok(raw.into_f64(lp))
}

/// Largest problem accepted by [`solve_exact`].
pub const EXACT_MAX_VARS: usize = 50;

/// Exact rational arithmetic; data are converted from their binary values.
pub fn solve_exact(lp: &LinearProgram) -> Result<ExactSolution> {
    lp.check_well_formed()?;
    if lp.n_vars() > EXACT_MAX_VARS {
        return Err(Error::Contract(format!(
            "exact mode supports at most {EXACT_MAX_VARS} variables, got {}",
            lp.n_vars()
        )));
    }
    let raw = simplex::run::<BigRational>(lp, &SolveOptions::default())?;
    Ok(raw.into_exact())
}

impl ExactSolution {
    pub fn to_f64(&self, lp: &LinearProgram) -> LpSolution {
        let primal: Vec<f64> = self.primal.iter().map(Scalar::to_f64).collect();
        let duals: Vec<f64> = self.duals.iter().map(Scalar::to_f64).collect();
        LpSolution {
            status: self.status,
            objective: self.objective.to_f64(),
            reduced_costs: check::reduced_costs(lp, &duals),
            primal,
            duals,
            var_status: self.var_status.clone(),
            row_status: self.row_status.clone(),
            farkas: self
                .farkas
                .as_ref()
                .map(|w| w.iter().map(Scalar::to_f64).collect()),
            pivots: self.pivots,
        }
    }
}

/// Converts an infeasibility certificate of a parametrized LP into a cut
/// `aᵀp ≥ b` that every parameter vector with a feasible LP satisfies and
/// the current parameters violate.
pub fn farkas_cut(lp: &LinearProgram, sol: &LpSolution) -> Result<Hyperplane> {
    let w = match (&sol.status, &sol.farkas) {
        (LpStatus::Infeasible, Some(w)) => w,
        _ => return Err(Error::Contract("farkas_cut needs an infeasible solve".into())),
    };
    if lp.n_params == 0 {
        return Err(Error::Contract("lp has no parameter space".into()));
    }
    let sup = check::farkas_sup(lp, w, 1e-9)
        .ok_or_else(|| Error::SolverFailure("certificate unbounded over the box".into()))?;
    let mut coeffs = vec![0.0; lp.n_params];
    let mut rhs = -sup;
    for (r, row) in lp.rows.iter().enumerate() {
        if w[r] == 0.0 {
            continue;
        }
        let form = row
            .rhs_form
            .as_ref()
            .ok_or_else(|| Error::Contract(format!("row {r} lacks an affine rhs form")))?;
        rhs += w[r] * form.constant;
        for &(k, b) in &form.terms {
            coeffs[k] -= w[r] * b;
        }
    }
    Ok(Hyperplane { coeffs, rhs })
}
