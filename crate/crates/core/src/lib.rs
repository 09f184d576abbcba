//! Structure-adaptive estimation of composite functions `g = f(G(.))` from
//! discretized white-noise observations.
//!
//! The library provides
//! * zone classification and rate formulas on the smoothness square ([`zones`]),
//! * signed piecewise-constant weights tuned to each zone ([`weights`]),
//! * ground-truth composite functions and noisy field synthesis ([`field`]),
//! * oriented linear estimators with a pointwise threshold-based selector
//!   over orientations ([`estimator`]),
//! * hypothesis families certifying the separation and information bounds
//!   behind the convergence rates ([`lowerbound`]),
//! * a Monte Carlo harness fitting empirical rate slopes ([`harness`]).

pub mod error;
pub mod estimator;
pub mod field;
pub mod frame;
pub mod harness;
pub mod lattice;
pub mod lowerbound;
pub mod quad;
pub mod sphere;
pub mod weights;
pub mod zones;

pub use error::{Error, Result};
