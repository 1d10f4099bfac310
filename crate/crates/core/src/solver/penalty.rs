//! Evaluation of `Ψ_α(z) = min { φ̄(z, σ) : ‖Dσ‖₁ ≤ α }` for a fixed `z`.
//!
//! This is the solver's iteration with `x` frozen: the primal blocks shrink
//! to `(σ, η)` under the single constraint `μ (Dσ − η) = 0`.

use crate::error::{check_len, Error, Result};
use crate::linops::{norm2, operator_norm, LinearOperator};
use crate::prox::{phi, project_l1_ball_in_place};

const MAX_ITER: usize = 1_000_000;

/// Minimizing `σ` together with the penalty value.
#[derive(Debug, Clone)]
pub struct PenaltySolution {
    pub value: f64,
    pub sigma: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `Ψ_α(z)` to tolerance `tol` (relative to `‖z‖`). `α = +∞` returns `‖z‖₁`.
pub fn evaluate_penalty(
    z: &[f64],
    alpha: f64,
    d_sigma: &dyn LinearOperator,
    tol: f64,
) -> Result<f64> {
    Ok(penalty_with_sigma(z, alpha, d_sigma, tol, None)?.value)
}

/// Like [`evaluate_penalty`] but returns the minimizing `σ` and accepts a
/// warm start for it.
pub fn penalty_with_sigma(
    z: &[f64],
    alpha: f64,
    d_sigma: &dyn LinearOperator,
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<PenaltySolution> {
    if !(alpha >= 0.0) {
        return Err(Error::Parameter(format!("alpha must be >= 0, got {alpha}")));
    }
    check_len("penalty input z", z.len(), d_sigma.cols())?;
    let abs: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    let l1: f64 = abs.iter().sum();
    if l1 == 0.0 {
        return Ok(PenaltySolution {
            value: 0.0,
            sigma: vec![0.0; z.len()],
            iterations: 0,
            converged: true,
        });
    }
    // σ = |z| is the unconstrained minimizer; keep it whenever it is feasible.
    let d_abs = d_sigma.apply(&abs);
    if alpha.is_infinite() || d_abs.iter().map(|v| v.abs()).sum::<f64>() <= alpha {
        return Ok(PenaltySolution {
            value: l1,
            sigma: abs,
            iterations: 0,
            converged: true,
        });
    }

    let k = z.len();
    let m = d_sigma.rows();
    let dn = operator_norm(d_sigma, 1e-10, 20_000).value;
    let mu = 1.0 / (dn * dn + 1.0).sqrt();
    let (tau1, tau2) = (0.99, 0.99);

    let mut sigma = match warm {
        Some(w) => {
            check_len("penalty warm start", w.len(), k)?;
            w.to_vec()
        }
        None => vec![norm2(z) / (k as f64).sqrt(); k],
    };
    let mut eta = d_sigma.apply(&sigma);
    project_l1_ball_in_place(&mut eta, alpha);
    let mut r = vec![0.0; m];
    let mut dr = vec![0.0; m];
    let mut a = vec![0.0; m];
    let mut grad = vec![0.0; k];
    let mut prev = sigma.clone();
    let threshold = tol * norm2(z);

    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        for i in 0..m {
            a[i] = r[i] - tau2 * dr[i];
        }
        prev.copy_from_slice(&sigma);
        d_sigma.adjoint_into(&a, &mut grad);
        for i in 0..k {
            sigma[i] = prox_phi_sigma(z[i], sigma[i] + tau1 * mu * grad[i], tau1);
        }
        for i in 0..m {
            eta[i] -= tau1 * mu * a[i];
        }
        project_l1_ball_in_place(&mut eta, alpha);
        d_sigma.apply_into(&sigma, &mut dr);
        for i in 0..m {
            dr[i] = mu * (dr[i] - eta[i]);
            r[i] -= tau2 * dr[i];
        }
        let res = norm2(&dr) / mu;
        let ds = sigma
            .iter()
            .zip(&prev)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        if res <= threshold && ds <= threshold {
            converged = true;
            break;
        }
    }
    if !sigma.iter().all(|s| s.is_finite()) {
        return Err(Error::Divergence {
            block: "sigma",
            iteration: iterations,
        });
    }
    let value = z.iter().zip(&sigma).map(|(&zi, &si)| phi(zi, si)).sum();
    Ok(PenaltySolution {
        value,
        sigma,
        iterations,
        converged,
    })
}

/// `argmin_σ ½(σ − s̃)² + τ φ(z, σ)`: the positive root of
/// `σ²(σ − s̃ + τ/2) = τ z²/2`, or `max(s̃ − τ/2, 0)` when `z = 0`.
fn prox_phi_sigma(z: f64, s_tilde: f64, tau: f64) -> f64 {
    let c = s_tilde - 0.5 * tau;
    let rhs = 0.5 * tau * z * z;
    if rhs == 0.0 {
        return c.max(0.0);
    }
    let f = |s: f64| s * s * (s - c) - rhs;
    let mut lo = c.max(0.0);
    let mut hi = lo + rhs.cbrt();
    let mut s = hi;
    for _ in 0..100 {
        let fs = f(s);
        if fs == 0.0 {
            return s;
        }
        if fs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let df = s * (3.0 * s - 2.0 * c);
        let mut next = s - fs / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-14_f64.max(4.0 * f64::EPSILON * s) {
            return next;
        }
        s = next;
    }
    s
}
