//! Ridge regression solvers built on randomized sketching.
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod counters;
pub mod data;
pub mod dual;
pub mod error;
pub mod hessian;
pub mod ihs;
pub mod lab;
pub mod oracle;
pub mod problem;
pub mod rng;
pub mod sketch;
pub mod solver;
pub mod tuning;

pub use counters::OpCounts;
pub use error::{Error, Result};
pub use problem::{direct_solve, ProblemInstance};
