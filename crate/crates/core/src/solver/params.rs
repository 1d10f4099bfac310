use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linops::{operator_norm, power_iteration, OpRef, StackedConstraintOperator};

use super::problem::LopAltProblem;

pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_TOL: f64 = 1e-6;
/// Margin applied to both step sizes after the scalings are fixed.
pub const STEP_MARGIN: f64 = 0.99;
/// Slack allowed on `τ1 τ2 ‖H‖² ≤ 1`.
pub const CONDITION_SLACK: f64 = 1e-6;
/// Default `τ1 / τ2`. Only the product enters the step condition; a small
/// primal step with a large dual step converges far faster on the denoising
/// problems than equal steps.
pub const STEP_RATIO: f64 = 1e-3;
const BACKTRACK: f64 = 0.9;
const NORM_TOL: f64 = 1e-10;
const NORM_MAX_ITER: usize = 20_000;
/// Budget for the check inside [`SolverParams::for_problem`], which runs on
/// every problem size; the standalone check uses the larger one.
const SETUP_NORM_TOL: f64 = 1e-9;
const SETUP_NORM_MAX_ITER: usize = 2_000;

/// Step sizes, constraint scalings and the stopping budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub tau1: f64,
    pub tau2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub max_iter: usize,
    /// Residual tolerance, relative to `‖y‖`.
    pub tol: f64,
    pub seed: u64,
}

impl SolverParams {
    /// Scalings from the operator norms of `problem`, backtracked until the
    /// step condition holds numerically, then the steps shrunk by
    /// [`STEP_MARGIN`] and split according to [`STEP_RATIO`].
    pub fn for_problem(problem: &LopAltProblem) -> Result<Self> {
        let ln = operator_norm(problem.l().as_ref(), NORM_TOL, NORM_MAX_ITER).value;
        let rn = operator_norm(problem.r().as_ref(), NORM_TOL, NORM_MAX_ITER).value;
        let dn = operator_norm(problem.d_sigma().as_ref(), NORM_TOL, NORM_MAX_ITER).value;
        let mut params = derive_step_params(ln, rn, dn, 1.0, 1.0)?;
        for _ in 0..200 {
            if check_with_budget(problem, &params, SETUP_NORM_TOL, SETUP_NORM_MAX_ITER)?.satisfied {
                params.tau1 *= STEP_MARGIN;
                params.tau2 *= STEP_MARGIN;
                return Ok(params.with_step_ratio(STEP_RATIO));
            }
            params.mu1 *= BACKTRACK;
            params.mu2 *= BACKTRACK;
            params.mu3 *= BACKTRACK;
        }
        Err(Error::Parameter(
            "could not satisfy the step-size condition".into(),
        ))
    }

    /// Rescales `τ1, τ2` to `τ1 / τ2 = ratio` keeping `τ1 τ2` fixed.
    pub fn with_step_ratio(mut self, ratio: f64) -> Self {
        let base = (self.tau1 * self.tau2).sqrt();
        let r = ratio.sqrt();
        self.tau1 = base * r;
        self.tau2 = base / r;
        self
    }

    pub fn with_budget(mut self, max_iter: usize, tol: f64) -> Self {
        self.max_iter = max_iter;
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Parameter(format!(
                "tol must be >= 0, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Scalings that bound each diagonal block of `H H^*` by `(τ1 τ2)^{-1}`:
///
/// ```text
/// mu1 = (τ1τ2)^{-1/2} / sqrt(2‖L‖² + 1)
/// mu2 = (τ1τ2)^{-1/2} / sqrt(2‖R‖² + 1)
/// mu3 = (τ1τ2)^{-1/2} / sqrt(‖D‖² + 1)
/// ```
///
/// The first two are heuristic; confirm with [`check_convergence_condition`].
pub fn derive_step_params(
    l_norm: f64,
    r_norm: f64,
    d_norm: f64,
    tau1: f64,
    tau2: f64,
) -> Result<SolverParams> {
    for (name, v) in [("tau1", tau1), ("tau2", tau2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    for (name, v) in [("L norm", l_norm), ("R norm", r_norm), ("D norm", d_norm)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    let s = (tau1 * tau2).powf(-0.5);
    Ok(SolverParams {
        tau1,
        tau2,
        mu1: s / (2.0 * l_norm * l_norm + 1.0).sqrt(),
        mu2: s / (2.0 * r_norm * r_norm + 1.0).sqrt(),
        mu3: s / (d_norm * d_norm + 1.0).sqrt(),
        max_iter: DEFAULT_MAX_ITER,
        tol: DEFAULT_TOL,
        seed: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    pub satisfied: bool,
    /// Estimated `‖H‖_op`.
    pub op_norm: f64,
    /// `τ1 τ2 ‖H‖²`.
    pub product: f64,
    /// Whether the power iteration met its tolerance.
    pub norm_converged: bool,
}

/// Assembles `H` for `params` and tests `τ1 τ2 ‖H‖² ≤ 1` by power iteration.
pub fn check_convergence_condition(
    problem: &LopAltProblem,
    params: &SolverParams,
) -> Result<ConvergenceCheck> {
    check_with_budget(problem, params, NORM_TOL, NORM_MAX_ITER)
}

fn check_with_budget(
    problem: &LopAltProblem,
    params: &SolverParams,
    tol: f64,
    max_iter: usize,
) -> Result<ConvergenceCheck> {
    params.validate()?;
    let h = StackedConstraintOperator::new(
        Arc::clone(problem.l()) as OpRef,
        Arc::clone(problem.r()),
        Arc::clone(problem.d_sigma()),
        params.mu1,
        params.mu2,
        params.mu3,
    )?;
    let est = power_iteration(&h, tol, max_iter, params.seed);
    let product = params.tau1 * params.tau2 * est.value * est.value;
    Ok(ConvergenceCheck {
        satisfied: product <= 1.0 + CONDITION_SLACK,
        op_norm: est.value,
        product,
        norm_converged: est.converged,
    })
}
