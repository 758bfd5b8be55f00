//! Solutions of the generalized Karcher equation Σ wᵢ g(X^{-1/2}AᵢX^{-1/2}) = 0
//! for positive definite matrices, with numerical checks of the Kantorovich
//! type inequalities that bound them.
//!
//! ```
//! use gke::{arithmetic_mean, solve_gke, Generator, MatrixEnsemble, PositiveDefiniteMatrix, SolverOptions};
//!
//! let a = PositiveDefiniteMatrix::from_real_diagonal(&[1.0, 4.0]).unwrap();
//! let b = PositiveDefiniteMatrix::from_real_diagonal(&[3.0, 2.0]).unwrap();
//! let e = MatrixEnsemble::uniform(vec![a, b]).unwrap();
//! let report = solve_gke(&e, &Generator::Affine, &SolverOptions::default()).unwrap();
//! assert!(report.converged);
//! let am = arithmetic_mean(&e).unwrap();
//! assert!((report.solution.as_matrix() - am.as_matrix()).norm() < 1e-10);
//! ```

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod generators;
pub mod hermitian;
pub mod maps;
pub mod means;
pub mod sampling;
pub mod verify;

pub use error::{GkeError, Result, SolverFailure};
pub use generators::{
    generalized_kantorovich, kantorovich_constant, mu_constant, refinement_midpoint,
    reflected_geometric_sum, Direction, Generator, MonotoneFunction,
};
pub use hermitian::{
    congruence, loewner_leq, loewner_leq_default, spectral_norm, trace_norm,
    weighted_geometric_pair, CMatrix, CVector, HermitianMatrix, LoewnerVerdict,
    PositiveDefiniteMatrix, SpectrumBounds, C64,
};
pub use maps::{apply_ensemble, make_random_map, MapKind, MapSpec, PositiveLinearMap};
pub use means::{
    arithmetic_mean, gke_residual, harmonic_mean, karcher_mean, scalar_gke, solve_gke,
    solve_gke_from, solve_power_mean, MatrixEnsemble, SolveReport, SolverOptions,
};
pub use verify::{run_check, run_suite, CheckId, CheckInstance, CheckResult, Recipe, SuiteEntry};
