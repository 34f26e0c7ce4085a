//! Lagrange finite elements on triangular meshes: dofs, assembly of the
//! Poisson, Robin and Wentzell forms, linear solvers, evaluation and norms.

mod assembly;
mod dofs;
mod element;
mod field;
mod locate;
mod norms;
mod quadrature;
mod solve;

pub use assembly::{
    assemble_poisson, assemble_wentzell, BcKind, BoundaryCondition, Constraints, DofStatus,
    LinearSystem, Source,
};
pub use dofs::DofMap;
pub use element::{AffineMap, ElementOrder};
pub use field::{Analytic, FiniteElementField, ScalarFunction, FIELD_HEADER};
pub use norms::{difference_norm, norm, NormKind, DEFAULT_NORM_DEGREE};
pub use quadrature::{gauss_legendre, TriangleRule};
pub use solve::{solve, solve_with, Factorization, SolveReport, SolverKind, DEFAULT_TOL, DIRECT_LIMIT};
