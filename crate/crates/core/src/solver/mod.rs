//! The split problem, its primal-dual solver and the TV baseline.

mod iterate;
mod params;
mod penalty;
mod problem;
mod reduce;
mod tv;

pub use iterate::{lv_iterate, solve, SolveReport, SolverState};
pub use params::{
    check_convergence_condition, derive_step_params, ConvergenceCheck, SolverParams,
    CONDITION_SLACK, DEFAULT_MAX_ITER, DEFAULT_TOL, STEP_MARGIN, STEP_RATIO,
};
pub use penalty::{evaluate_penalty, penalty_with_sigma, PenaltySolution};
pub use problem::{sigma_difference_2d, LopAltProblem, Loss};
pub use reduce::{reduce_invertible, ReducedProblem, MAX_CONDITION};
pub use tv::{taut_string_tv_1d, tv_problem, tv_solve};
