//! Weak decreasing stochastic (WDS) order checks for families of
//! negative-mean probability measures, Cox-Hobson barrier construction, and
//! Monte Carlo verification that WDS families embed in Brownian motion as
//! supermartingales through non-decreasing stopping times.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cox_hobson;
pub mod mc_sim;
pub mod measures;
pub mod orderings;
pub mod poly;
pub mod reproduce;
pub mod transforms;

#[cfg(test)]
pub(crate) mod testing;

pub use measures::{Atom, Measure, MeasureError, MeasureFamily, Segment};
