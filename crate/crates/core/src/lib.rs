//! Row-action (Kaczmarz-type) solvers for dense least-squares problems,
//! with the iteration operators, control sequences, convergence bounds and
//! rate diagnostics needed to study them.

pub mod analysis;
pub mod controls;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod projections;
pub mod rng;
pub mod solvers;

pub use analysis::{
    check_ack_bound, check_acek_bound, check_ekt_bound, check_kt_bound, check_mrek_bound,
    check_mrk_contraction, check_rek_expectation, check_rk_expectation, classify_rate,
    error_trace, monte_carlo_expected_error, reference_solution, BoundReport, McSolver,
    RateClassification, RateVerdict,
};
pub use controls::{verify_window_property, ControlKind, ControlState};
pub use error::{Error, Result};
pub use linalg::{
    min_norm_solution, spectral_norm, subspace_projector, svd, DenseMatrix, Subspace, Vector,
};
pub use operators::{
    build_column_operators, build_row_operators, realized_window_contraction, IterationOperators,
};
pub use problems::{
    generate, load_problem, problem_from_string, problem_to_string, save_problem,
    LeastSquaresProblem,
};
pub use projections::{
    project_column, project_hyperplane, project_row_null, sweep_columns, sweep_rows,
};
pub use rng::SplitMix64;
pub use solvers::{
    solve_ekt, solve_extended_kaczmarz, solve_kaczmarz, solve_kt, IterateTrace, SolverConfig,
};
