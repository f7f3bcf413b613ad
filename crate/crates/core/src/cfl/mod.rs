//! Round-or-separate over the flow relaxation for general CFL.
//!
//! A candidate `(x′, y′)` of the master LP is either rounded to an integral
//! solution within `max{3/(2α), (7−4α)/(1−α)²}` of `ψ(x′, y′)` or rejected
//! with a hyperplane that every integral solution satisfies.

mod driver;
mod iterative;
mod sparse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::FractionalSolution;

pub use driver::{
    master_lp, ratio_of, round_or_separate, solve_cfl, CflRun, CutRecord, RoundOutcome, Rounding,
};
pub use iterative::{
    iterative_round, tuple_lp_witness, tuple_lp, theta, IterationRecord, IterativeResult, ParamTuple,
};
pub use sparse::{build_g, build_sparse_flow, GConstruction, SparseFlow};

/// `(10 − √67)/11`, where both terms of the ratio coincide.
pub fn alpha_star() -> f64 {
    (10.0 - 67f64.sqrt()) / 11.0
}

/// `max{3/(2α), (7−4α)/(1−α)²}`.
pub fn ratio_bound(alpha: f64) -> f64 {
    let (a, b) = ratio_terms(alpha);
    a.max(b)
}

pub fn ratio_terms(alpha: f64) -> (f64, f64) {
    (3.0 / (2.0 * alpha), (7.0 - 4.0 * alpha) / ((1.0 - alpha) * (1.0 - alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingParams {
    pub alpha: f64,
    /// Threshold comparisons and matching reachability.
    pub tol: f64,
    /// Slack allowed on invariant checks.
    pub check_tol: f64,
    /// Cutting-plane budget; `None` means `200·(|F|+|D|)`.
    pub max_cuts: Option<usize>,
}

impl Default for RoundingParams {
    fn default() -> Self {
        Self { alpha: alpha_star(), tol: 1e-7, check_tol: 1e-6, max_cuts: None }
    }
}

impl RoundingParams {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { alpha, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0 / 3.0) {
            return Err(Error::Contract(format!("alpha {} outside (0, 1/3]", self.alpha)));
        }
        if !(self.tol >= 0.0 && self.check_tol >= 0.0) {
            return Err(Error::Contract("negative tolerance".into()));
        }
        Ok(())
    }
}

/// Facility classes of a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    /// `0 < y′ < α`
    pub small: Vec<usize>,
    /// `y′ ≥ α`
    pub big: Vec<usize>,
    /// Big facilities loaded above `(1−α)u`.
    pub big_gt: Vec<usize>,
    pub big_le: Vec<usize>,
}

impl Classification {
    pub fn in_big(&self, i: usize) -> bool {
        self.big.binary_search(&i).is_ok()
    }
}

pub fn classify(sol: &FractionalSolution, capacity: &[f64], alpha: f64) -> Classification {
    let mut c = Classification { small: vec![], big: vec![], big_gt: vec![], big_le: vec![] };
    for (i, &y) in sol.y.iter().enumerate() {
        if y >= alpha {
            c.big.push(i);
            let load: f64 = sol.x[i].iter().sum();
            if load > (1.0 - alpha) * capacity[i] {
                c.big_gt.push(i);
            } else {
                c.big_le.push(i);
            }
        } else if y > 0.0 {
            c.small.push(i);
        }
    }
    c
}
