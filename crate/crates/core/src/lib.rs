//! Virtual-purification error mitigation for interferometric phase
//! estimation, simulated on truncated two-mode Fock spaces.

// negated comparisons double as NaN rejection
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod fock;
pub mod linalg;
pub mod noise;
pub mod quadrature;
pub mod refpoint;
pub mod scenario;
pub mod vpem;

pub use error::{Error, ErrorCategory, Result};
