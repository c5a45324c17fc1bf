//! Galerkin discretization, spectral analysis and Newton solvers for the
//! semilinear nonlocal Dirichlet problem
//!
//! ```text
//! −L_K u = f(x, u)  in Ω = (a, b),      u = 0  outside Ω,
//! ```
//!
//! where `L_K` is the integro-differential operator of a fractional-type
//! kernel `K`. The crate assembles the stiffness form
//! `∫∫_Q (u(x)−u(y))(v(x)−v(y)) K(x−y)`, computes the eigenpairs of
//! `A e = λ M e`, and solves both existence regimes: slopes of `f` below
//! `λ₁` (minimization) and slopes inside a gap `(λ_k, λ_{k+1})` (saddle
//! point). Every checkable hypothesis has an audit function.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod discretization;
pub mod error;
pub mod kernel;
pub mod nonlinearity;
pub mod quadrature;
pub mod report;

pub mod spectral;
pub mod variational;

pub use discretization::{assemble, build_uniform_mesh, tail_weight, AssembledOperator, AssemblyOptions, Mesh};
pub use error::{Error, Result};
pub use kernel::{audit_kernel, make_fractional_kernel, Kernel, KernelAudit, KernelFamily};
pub use nonlinearity::{
    audit_growth, check_f2_gap, classify, eval_big_f, eval_f, CaseClassification, GrowthGrid, NonlinearitySpec, Profile,
};
pub use spectral::{
    critical_exponent, poincare_lower_bound, project, rayleigh_quotient, solve_eigenproblem, Part, Spectrum,
};
pub use variational::{
    eval_gradient, eval_j, geometry_probe, linear_nonresonant_solve, morse_index, residual_weakform, solve_case_a,
    solve_case_b, uniqueness_probe, GeometryOptions, GeometryProbe, SolveReport, SolverOptions, UniquenessVerdict,
};
