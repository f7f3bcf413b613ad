//! LP-based approximation algorithms for hard-capacitated facility location.
//!
//! * [`cfl`]: round-or-separate over the multicommodity-flow relaxation,
//!   driven by a cutting-plane master LP; ratio (10+√67)/2 ≈ 9.0927.
//! * [`cflcfc`]: cluster/outlier rounding of the natural LP for unit opening
//!   costs; ratio 4.
//!
//! Supporting layers: a dense simplex with duals and Farkas certificates
//! ([`lp`]), flow routines ([`flow`]), the flow relaxation itself ([`mfn`]),
//! and an exhaustive solver for ground truth ([`oracle`]).

#![allow(clippy::needless_range_loop)] // index loops read better in the numeric code

pub mod cfl;
pub mod cflcfc;
pub mod cli;
pub mod error;
pub mod instances;
pub mod invariants;
pub mod flow;
pub mod lp;
pub mod mfn;
pub mod oracle;

pub use error::{Error, Result};
