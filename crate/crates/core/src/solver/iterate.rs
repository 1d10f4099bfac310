use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linops::norm2;
use crate::prox::{perspective_hinted, project_l1_ball_in_place, varphi};

use super::params::SolverParams;
use super::problem::LopAltProblem;

/// Primal blocks `(x, σ, u, v, η)`, duals `(r1, r2, r3)` and the latest
/// constraint increments `Δr`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub eta: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
    pub delta_r1: Vec<f64>,
    pub delta_r2: Vec<f64>,
    pub delta_r3: Vec<f64>,
}

impl SolverState {
    /// All zeros except `σ = 1`.
    pub fn initial(problem: &LopAltProblem) -> Self {
        let lay = problem.layout();
        Self {
            x: vec![0.0; lay.n],
            sigma: vec![1.0; lay.k],
            u: vec![0.0; lay.j],
            v: vec![0.0; lay.k],
            eta: vec![0.0; lay.m],
            r1: vec![0.0; lay.j],
            r2: vec![0.0; lay.k],
            r3: vec![0.0; lay.m],
            delta_r1: vec![0.0; lay.j],
            delta_r2: vec![0.0; lay.k],
            delta_r3: vec![0.0; lay.m],
        }
    }

    /// Seeded random start: every block uniform in `[-1, 1]`, `σ` in `[0, 2]`.
    pub fn random(problem: &LopAltProblem, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
            (0..n)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect()
        };
        let lay = problem.layout();
        Self {
            x: draw(lay.n, -1.0, 1.0),
            sigma: draw(lay.k, 0.0, 2.0),
            u: draw(lay.j, -1.0, 1.0),
            v: draw(lay.k, -1.0, 1.0),
            eta: draw(lay.m, -1.0, 1.0),
            r1: draw(lay.j, -1.0, 1.0),
            r2: draw(lay.k, -1.0, 1.0),
            r3: draw(lay.m, -1.0, 1.0),
            delta_r1: draw(lay.j, -1.0, 1.0),
            delta_r2: draw(lay.k, -1.0, 1.0),
            delta_r3: draw(lay.m, -1.0, 1.0),
        }
    }

    pub fn check_dims(&self, problem: &LopAltProblem) -> Result<()> {
        let lay = problem.layout();
        check_len("state x", self.x.len(), lay.n)?;
        check_len("state sigma", self.sigma.len(), lay.k)?;
        check_len("state u", self.u.len(), lay.j)?;
        check_len("state v", self.v.len(), lay.k)?;
        check_len("state eta", self.eta.len(), lay.m)?;
        check_len("state r1", self.r1.len(), lay.j)?;
        check_len("state r2", self.r2.len(), lay.k)?;
        check_len("state r3", self.r3.len(), lay.m)?;
        check_len("state delta_r1", self.delta_r1.len(), lay.j)?;
        check_len("state delta_r2", self.delta_r2.len(), lay.k)?;
        check_len("state delta_r3", self.delta_r3.len(), lay.m)
    }

    /// `(‖Lx − u‖, ‖Rx − v‖, ‖Dσ − η‖)`.
    pub fn residuals(&self, problem: &LopAltProblem) -> [f64; 3] {
        let diff = |a: Vec<f64>, b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
        };
        [
            diff(problem.l().apply(&self.x), &self.u),
            diff(problem.r().apply(&self.x), &self.v),
            diff(problem.d_sigma().apply(&self.sigma), &self.eta),
        ]
    }
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    /// `f(Lx) + λ φ̄(v, σ)` after every iteration. The penalty is taken at
    /// the split variable `v`, which always lies in the domain of `φ̄`.
    pub objective_trace: Vec<f64>,
    /// Constraint residuals after every iteration.
    pub residual_trace: Vec<[f64; 3]>,
    pub iterations: usize,
    pub converged: bool,
    /// Final iterate, usable as a warm start.
    pub state: SolverState,
}

/// One pass of the primal-dual iteration on the split problem.
pub fn lv_iterate(
    state: &SolverState,
    problem: &LopAltProblem,
    params: &SolverParams,
) -> Result<SolverState> {
    params.validate()?;
    state.check_dims(problem)?;
    let mut next = state.clone();
    let mut ws = Workspace::new(problem);
    step(&mut next, problem, params, &mut ws, 1)?;
    Ok(next)
}

struct Workspace {
    a1: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
    tmp_n: Vec<f64>,
    tmp_k: Vec<f64>,
    prev_x: Vec<f64>,
    prev_sigma: Vec<f64>,
}

impl Workspace {
    fn new(problem: &LopAltProblem) -> Self {
        let lay = problem.layout();
        Self {
            a1: vec![0.0; lay.j],
            a2: vec![0.0; lay.k],
            a3: vec![0.0; lay.m],
            tmp_n: vec![0.0; lay.n],
            tmp_k: vec![0.0; lay.k],
            prev_x: vec![0.0; lay.n],
            prev_sigma: vec![0.0; lay.k],
        }
    }
}

fn step(
    s: &mut SolverState,
    problem: &LopAltProblem,
    params: &SolverParams,
    ws: &mut Workspace,
    iteration: usize,
) -> Result<()> {
    let SolverParams {
        tau1,
        tau2,
        mu1,
        mu2,
        mu3,
        ..
    } = *params;

    // a = r - τ2 Δr, the extrapolated duals.
    for (a, (r, d)) in ws.a1.iter_mut().zip(s.r1.iter().zip(&s.delta_r1)) {
        *a = r - tau2 * d;
    }
    for (a, (r, d)) in ws.a2.iter_mut().zip(s.r2.iter().zip(&s.delta_r2)) {
        *a = r - tau2 * d;
    }
    for (a, (r, d)) in ws.a3.iter_mut().zip(s.r3.iter().zip(&s.delta_r3)) {
        *a = r - tau2 * d;
    }

    // Gradient step w + τ1 H^* a. The identity blocks of H carry a minus sign.
    ws.prev_x.copy_from_slice(&s.x);
    ws.prev_sigma.copy_from_slice(&s.sigma);
    problem.l().adjoint_into(&ws.a1, &mut ws.tmp_n);
    for (x, t) in s.x.iter_mut().zip(&ws.tmp_n) {
        *x += tau1 * mu1 * t;
    }
    problem.r().adjoint_into(&ws.a2, &mut ws.tmp_n);
    for (x, t) in s.x.iter_mut().zip(&ws.tmp_n) {
        *x += tau1 * mu2 * t;
    }
    problem.d_sigma().adjoint_into(&ws.a3, &mut ws.tmp_k);
    for (sg, t) in s.sigma.iter_mut().zip(&ws.tmp_k) {
        *sg += tau1 * mu3 * t;
    }
    for (u, a) in s.u.iter_mut().zip(&ws.a1) {
        *u -= tau1 * mu1 * a;
    }
    for (v, a) in s.v.iter_mut().zip(&ws.a2) {
        *v -= tau1 * mu2 * a;
    }
    for (e, a) in s.eta.iter_mut().zip(&ws.a3) {
        *e -= tau1 * mu3 * a;
    }

    // Proximal steps; x passes through unchanged.
    problem.loss().prox_in_place(&mut s.u, problem.y(), tau1);
    let gamma = tau1 * problem.lambda();
    if gamma > 0.0 {
        for ((v, sg), &hint) in s.v.iter_mut().zip(s.sigma.iter_mut()).zip(&ws.prev_sigma) {
            (*v, *sg) = perspective_hinted(*v, *sg, gamma, hint);
        }
    } else {
        // λ = 0 leaves only the domain constraint σ ≥ 0.
        s.sigma.iter_mut().for_each(|sg| *sg = sg.max(0.0));
    }
    project_l1_ball_in_place(&mut s.eta, problem.alpha());

    // Δr = H w at the new iterate, then the dual update.
    problem.l().apply_into(&s.x, &mut s.delta_r1);
    for (d, u) in s.delta_r1.iter_mut().zip(&s.u) {
        *d = mu1 * (*d - u);
    }
    problem.r().apply_into(&s.x, &mut s.delta_r2);
    for (d, v) in s.delta_r2.iter_mut().zip(&s.v) {
        *d = mu2 * (*d - v);
    }
    problem.d_sigma().apply_into(&s.sigma, &mut s.delta_r3);
    for (d, e) in s.delta_r3.iter_mut().zip(&s.eta) {
        *d = mu3 * (*d - e);
    }
    for (r, d) in s.r1.iter_mut().zip(&s.delta_r1) {
        *r -= tau2 * d;
    }
    for (r, d) in s.r2.iter_mut().zip(&s.delta_r2) {
        *r -= tau2 * d;
    }
    for (r, d) in s.r3.iter_mut().zip(&s.delta_r3) {
        *r -= tau2 * d;
    }

    for (name, block) in [
        ("x", &s.x),
        ("sigma", &s.sigma),
        ("u", &s.u),
        ("v", &s.v),
        ("eta", &s.eta),
        ("r1", &s.r1),
        ("r2", &s.r2),
        ("r3", &s.r3),
    ] {
        if !block.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence {
                block: name,
                iteration,
            });
        }
    }
    Ok(())
}

/// Runs the iteration until the three constraint residuals and the changes
/// in `x` and `σ` per unit primal step (`‖Δx‖ / τ1`, `‖Δσ‖ / τ1`) all fall
/// below `tol * ‖y‖`, or `max_iter` is reached.
pub fn solve(
    problem: &LopAltProblem,
    params: &SolverParams,
    init: Option<SolverState>,
) -> Result<SolveReport> {
    params.validate()?;
    let mut state = match init {
        Some(s) => {
            s.check_dims(problem)?;
            s
        }
        None => SolverState::initial(problem),
    };
    let y_norm = norm2(problem.y());
    let threshold = params.tol * if y_norm > 0.0 { y_norm } else { 1.0 };
    let [mu1, mu2, mu3] = [params.mu1, params.mu2, params.mu3];

    let mut ws = Workspace::new(problem);
    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        step(&mut state, problem, params, &mut ws, iterations)?;

        let res = [
            norm2(&state.delta_r1) / mu1,
            norm2(&state.delta_r2) / mu2,
            norm2(&state.delta_r3) / mu3,
        ];
        let fit = problem
            .loss()
            .value(&problem.l().apply(&state.x), problem.y());
        let pen = if problem.lambda() > 0.0 {
            problem.lambda() * varphi(&state.v, &state.sigma)?
        } else {
            0.0
        };
        objective_trace.push(fit + pen);
        residual_trace.push(res);

        let step_norm = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
                / params.tau1
        };
        let dx = step_norm(&state.x, &ws.prev_x);
        let dsigma = step_norm(&state.sigma, &ws.prev_sigma);
        if res.iter().all(|&r| r <= threshold) && dx <= threshold && dsigma <= threshold {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        x_hat: state.x.clone(),
        sigma_hat: state.sigma.clone(),
        objective_trace,
        residual_trace,
        iterations,
        converged,
        state,
    })
}
