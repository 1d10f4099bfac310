//! Total-variation baseline.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linops::{make_diff_1d, Identity, OpRef};

use super::iterate::{solve, SolveReport};
use super::params::SolverParams;
use super::problem::{LopAltProblem, Loss};

/// `min ½‖y − x‖² + λ‖Rx‖₁` as the unconstrained-`σ` special case of the
/// block-sparse problem.
pub fn tv_problem(y: Vec<f64>, r: OpRef, lambda: f64) -> Result<LopAltProblem> {
    let n = y.len();
    let k = r.rows();
    if k < 2 {
        return Err(Error::Dimension(format!(
            "TV needs a transform with at least 2 outputs, got {k}"
        )));
    }
    let l: OpRef = Arc::new(Identity::new(n)?);
    // Any σ-difference works: with α = ∞ its constraint is never active.
    let d: OpRef = Arc::new(make_diff_1d(k)?);
    LopAltProblem::new(y, l, r, d, Loss::Quadratic, lambda, f64::INFINITY)
}

pub fn tv_solve(y: &[f64], r: OpRef, lambda: f64, params: &SolverParams) -> Result<SolveReport> {
    let problem = tv_problem(y.to_vec(), r, lambda)?;
    solve(&problem, params, None)
}

/// Exact minimizer of `½‖y − x‖² + λ Σ|x_{k+1} − x_k|` by the taut-string
/// construction (Condat's direct algorithm).
pub fn taut_string_tv_1d(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    if n <= 1 || !(lambda > 0.0) {
        return y.to_vec();
    }
    let mut out = vec![0.0; n];
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = y[0] - lambda;
    let mut vmax = y[0] + lambda;
    let twolambda = 2.0 * lambda;
    let minlambda = -lambda;

    loop {
        while k == n - 1 {
            if umin < 0.0 {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = y[k];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = y[k];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > k {
                        break;
                    }
                }
                return out;
            }
        }
        umin += y[k + 1] - vmin;
        if umin < minlambda {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = y[k];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
        } else {
            umax += y[k + 1] - vmax;
            if umax > lambda {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                kplus = k0;
                vmax = y[k];
                vmin = vmax - twolambda;
                umin = lambda;
                umax = minlambda;
            } else {
                k += 1;
                if umin >= lambda {
                    kminus = k;
                    vmin += (umin - lambda) / (k - k0 + 1) as f64;
                    umin = lambda;
                }
                if umax <= minlambda {
                    kplus = k;
                    vmax += (umax + lambda) / (k - k0 + 1) as f64;
                    umax = minlambda;
                }
            }
        }
    }
}
