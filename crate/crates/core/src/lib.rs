//! Numerical laboratory for the indefinite elliptic problem
//!
//! ```text
//! -lap(u) = (lambda*c_plus(x) - c_minus(x))*u + mu(x)*|grad u|^2 + h(x),
//! u = 0 on the boundary,
//! ```
//!
//! on intervals and rectangles: damped Newton solvers (directly in `u` or in
//! the exponential variable), pseudo-arclength continuation of the solution
//! branch in `lambda` with fold detection, an eigenvalue-based nonexistence
//! threshold, empirical verification of interior and boundary weak Harnack
//! inequalities (including the p-Laplacian boundary form), and a priori
//! bound certificates assembled from computed branches.

pub mod band;
pub mod certify;
pub mod coefficients;
pub mod continuation;
pub mod eigen;
mod error;
pub mod expr;
pub mod field;
pub mod harnack;
pub mod mesh;
pub mod solver;

pub use coefficients::{
    builtin, builtin_benchmark, CoefficientSet, Domain, ProblemSpec, ValidationReport,
    BUILTIN_NAMES,
};
pub use error::{Error, Result};
pub use field::DiscreteField;
pub use mesh::{Mesh, Region};
pub use solver::{
    check_lower_solution, check_upper_solution, cole_hopf_forward, cole_hopf_inverse,
    gradient_squared, jacobian, monotone_iterate, newton_solve, p_laplacian_residual,
    p_laplacian_solve, residual, residual_form, solve_linear_reaction, ProblemForm, Solution,
    SolverOptions, SolverVariable,
};
