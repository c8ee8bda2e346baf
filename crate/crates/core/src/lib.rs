//! Hybrid Legendre/block-pulse spectral solver for nonlinear Fredholm
//! integro-differential equations on `[0, 1)`.
//!
//! The unknown `y(t)` is expanded as `Yᵀ B(t)` in the hybrid basis
//! `b_{km}(t) = p_m(2qt − 2k + 1)` restricted to block `k`. Derivatives are
//! recovered through the inverse of the transposed operational matrix of
//! integration, products are handled by the coefficient matrix `C̃`, and the
//! resulting quadratic algebraic system is solved by damped Newton iteration.
//!
//! Module map:
//!
//! * [`basis`]: Legendre recurrence, hybrid functions, the stacked vector `B(t)`.
//! * [`quadrature`]: Gauss–Legendre rules.
//! * [`operators`]: `P`, `L`, `J = (Pᵀ)⁻¹` and `C̃`.
//! * [`projection`]: coefficient vectors of functions and kernel matrices.
//! * [`system`]: the derivative transform, residual, Jacobian and Newton solve.
//! * [`expr`]: the expression language used for `l`, `g`, `f`.
//! * [`problem`], [`solution`], [`matrix_io`], [`driver`]: problem files,
//!   reconstruction and CSV output used by the command-line tool.

pub mod basis;
pub mod driver;
mod error;
pub mod expr;
pub mod matrix_io;
pub mod operators;
pub mod problem;
pub mod projection;
pub mod quadrature;
pub mod solution;
pub mod system;

pub use basis::{basis_vector, hybrid_eval, legendre, BasisConfig, HybridIndex};
pub use error::{Error, Result};
pub use expr::Expr;
pub use operators::{
    build_j, build_l, build_p, coeff_matrix, OpMatrix, OpRole, TripleProductTensor,
};
pub use problem::{ProblemFile, BUILTIN_NAMES};
pub use projection::{
    project_function, project_initial_conditions, project_kernel, CoeffVector, KernelMatrix,
};
pub use quadrature::{GaussLegendre, DEFAULT_QUAD_NODES};
pub use solution::{reconstruct, SolutionTable};
pub use system::{
    derivative_coeffs, Discretization, InitialGuess, ProblemSpec, SolveOptions, SolveReport,
};
