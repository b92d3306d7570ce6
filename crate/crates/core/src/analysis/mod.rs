//! Error analysis: quadrature, manufactured problems, norms and the
//! Crouzeix–Raviart reference solver.

pub mod cr;
pub mod norms;
pub mod problems;
pub mod quadrature;

pub use cr::cr_reference_solve;
pub use norms::{
    convergence_orders, error_h1, error_l2, error_multiplier, exact_multiplier, interpolate, midpoint_traces,
};
pub use problems::{ExactSolution, ManufacturedProblem, PROBLEM_NAMES};
pub use quadrature::TriangleQuadrature;
