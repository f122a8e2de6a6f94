//! Decomposition solvers for convex composite quadratic programs whose
//! constraints have primal block-angular structure: a set of coupling rows
//! shared by all blocks plus independent local rows per block.
//!
//! The crate provides a dual-side symmetric Gauss-Seidel ADMM and a family of
//! primal-side inexact augmented Lagrangian methods with block-separable
//! proximal terms, together with the sparse kernels, proximal maps, KKT
//! residual machinery, and seeded instance generators they rely on.

pub mod chol;
pub mod error;
pub mod gen;
pub mod kkt;
pub mod model;
pub mod palm;
pub mod pcg;
pub mod prox;
pub mod report;
pub mod sgs;
pub mod sparse;
pub mod vecops;

pub use error::{Error, Result};
pub use kkt::{compute_residuals, kkt_map, NormCache, PrimalDualIterate, Residuals};
pub use model::{
    Block, BlockAngularProblem, BlockVector, Cone, Metadata, Quadratic, SeparableFunction,
    ValidationReport,
};
pub use palm::{
    check_theorem1, palm_solve, recover_duals, solve_subproblem, MajorizerKind, PalmOutcome,
    PalmParams, PalmTrace, PalmVariant, ProximalMajorizer, SubproblemSolution, SubproblemSpec,
    Theorem1Report,
};
pub use report::{SolveReport, Termination, TracePoint};
pub use sgs::{LinearSolverKind, SgsAdmmParams, SigmaUpdate};
pub use sparse::SparseMatrix;
