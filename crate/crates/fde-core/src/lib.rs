//! Solver library for two-point boundary value problems of high-order
//! functional differential equations
//!
//!   u^(m)(t) = f(t, u(t), u(phi(t))),   m in {3, 4, 5},
//!
//! via the Green-function fixed-point iteration discretized with
//! Euler-Maclaurin corrected trapezoidal quadrature at accuracy orders
//! O(h^4), O(h^6) and O(h^8), plus a convergence-study harness that
//! regression-checks the solver against embedded reference tables.
//!
//! Modules:
//! - [`kernels`]: exact piecewise-polynomial Green kernels and boundary
//!   polynomials for the five supported boundary-condition families.
//! - [`findiff`]: finite-difference stencils D^(m)_k used inside the
//!   quadrature corrections.
//! - [`quadrature`]: the corrected trapezoidal operators L_p(G, x).
//! - [`solver`]: the discrete fixed-point iteration and contraction
//!   diagnostics.
//! - [`problems`]: problem-definition files, expression parser and the
//!   registry of built-in example problems.
//! - [`harness`]: convergence studies, reference tables and table output.

pub mod findiff;
pub mod harness;
pub mod kernels;
pub mod poly;
pub mod problems;
pub mod quadrature;
pub mod solver;

pub use kernels::{
    build_boundary_poly, build_green_kernel, BcFamily, BoundaryConditions, BoundaryPoly,
    GreenKernel, KernelError, PiecewisePoly2, Side,
};
pub use quadrature::{GridFunction, Level, QuadratureError, QuadratureOperator, UniformGrid};
pub use solver::{
    contraction_check, estimate_m0, solve, BvpProblem, ContractionReport, SolveReport,
    SolverConfig, SolverError,
};
