//! Subsequence densities of long words and their limit objects.
//!
//! Words are finite sequences over an [`words::Alphabet`]; their limits are
//! piecewise-polynomial functions [`limits::LimitFn`] (binary) or
//! [`limits::LimitVector`] (`k` letters). Polynomial and limit code is generic
//! over [`scalar::Scalar`]; the aliases below pick the usual instances.

pub mod error;
pub mod forcibility;
pub mod io;
pub mod limits;
pub mod permutons;
pub mod poly;
pub mod regularity;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod testing;
pub mod uniformity;
pub mod words;

pub use error::{Error, Result};

/// Exact rational scalar used throughout.
pub type Rational = num_rational::BigRational;
/// Limit function with exact coefficients.
pub type ExactLimit = limits::LimitFn<Rational>;
/// Limit function in double precision.
pub type FloatLimit = limits::LimitFn<f64>;
/// Piecewise polynomial with exact coefficients.
pub type ExactPiecewise = limits::Piecewise<Rational>;
/// Interval partition with rational breakpoints.
pub type ExactPartition = regularity::IntervalPartition<Rational>;
