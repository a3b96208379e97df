//! Symbolic factorization of linear and quasi-linear differential operators
//! written in slot-indexed derivative notation.
//!
//! - [`jet`]: derivative indices `(k, h)` and their arithmetic
//! - [`expr`]: exact symbolic expressions
//! - [`operator`]: operators, products and their expansion
//! - [`conditions`]: factorization condition systems and candidate checks
//! - [`factor`]: factorization search
//! - [`cascade`]: particular solutions from a factorization
//! - [`cli`]: problem files and the command-line front end

pub mod cascade;
pub mod cli;
pub mod conditions;
pub mod expr;
pub mod factor;
pub mod jet;
pub mod operator;

/// Exact rational scalar used for every symbolic constant.
pub type Rational = num_rational::BigRational;

/// Sampled solution in double precision.
pub type Trajectory64 = cascade::Trajectory<f64>;
