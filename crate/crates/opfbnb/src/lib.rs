//! Global bounds for AC optimal power flow.
//!
//! The pipeline: parse a MATPOWER-style case into a per-unit [`case::Network`],
//! compute a locally optimal AC dispatch (the upper bound), build the
//! quadratic-convex relaxation of the power-flow equations over a variable
//! box, solve it with a cutting-plane loop around a bounded-variable simplex
//! (the lower bound), and close the remaining gap with a level-synchronous
//! branch-and-bound over voltage magnitudes and angle differences.

pub mod acopf;
pub mod case;
pub mod qc;
pub mod solver;

pub use case::{parse_case, Network};
