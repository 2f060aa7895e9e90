//! Simulation and exact computation for simple Λ-coalescents with dust.
//!
//! * [`measures`] parses and describes the finite measure `Λ` on `(0,1]`.
//! * [`engine`] runs the Poisson construction and tracks `f1`, the asymptotic
//!   frequency of the block containing individual 1.
//! * [`dirac_exact`] computes the law of `f1[1]` exactly when `Λ = δ_p`.
//! * [`analysis`] turns replicate runs into statistical checks.
//!
//! Replicates are independent ChaCha streams keyed by `(seed, replicate)`
//! ([`stream`]) and are reduced in a fixed order ([`replicate`]), so results
//! do not depend on the thread count.

// Guards like `!(x > 0.0)` reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dirac_exact;
pub mod engine;
pub mod measures;
pub mod replicate;
pub mod stream;
pub mod weight;

pub use num_rational::BigRational;

pub use measures::{MeasureError, MeasureMoments, MeasureSpec};
pub use weight::{format_rational, parse_rational, Weight};
