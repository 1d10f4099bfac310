//! Slow reference implementations shared by the integration tests and the
//! acceptance runner. None of them calls the library routine it checks.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Nearest point of `{p : ‖p‖₁ ≤ α}` to `eta` for `len ≤ 4`: a grid over
/// the cube `[-α, α]^d`, then pattern search over all `3^d` neighbours with
/// a shrinking step. Candidates outside the ball are scaled radially back
/// onto it, so the search can slide along the boundary. Moves are ranked by
/// the exact change in `‖p − η‖²` to avoid cancellation near the optimum.
/// Pairwise exact line searches along the boundary finish the polish.
pub fn brute_l1_projection(eta: &[f64], alpha: f64) -> Vec<f64> {
    let d = eta.len();
    assert!((1..=4).contains(&d));
    if norm1(eta) <= alpha {
        return eta.to_vec();
    }
    let retract = |p: &mut [f64]| {
        let n = norm1(p);
        if n > alpha {
            p.iter_mut().for_each(|v| *v *= alpha / n);
        }
    };
    // Change in the objective when moving from `b` to `c`.
    let gain = |b: &[f64], c: &[f64]| -> f64 {
        b.iter()
            .zip(c)
            .zip(eta)
            .map(|((b, c), e)| (c - b) * (c + b - 2.0 * e))
            .sum()
    };

    let steps = 12usize;
    let mut best = vec![0.0; d];
    let mut idx = vec![0usize; d];
    let mut p = vec![0.0; d];
    'grid: loop {
        for (pi, &i) in p.iter_mut().zip(&idx) {
            *pi = -alpha + 2.0 * alpha * i as f64 / steps as f64;
        }
        if norm1(&p) <= alpha && gain(&best, &p) < 0.0 {
            best.copy_from_slice(&p);
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i <= steps {
                continue 'grid;
            }
            *i = 0;
        }
        break;
    }

    let stencil: Vec<Vec<f64>> = (0..3usize.pow(d as u32))
        .map(|mut c| {
            (0..d)
                .map(|_| {
                    let s = (c % 3) as f64 - 1.0;
                    c /= 3;
                    s
                })
                .collect()
        })
        .filter(|s: &Vec<f64>| s.iter().any(|&v| v != 0.0))
        .collect();
    let mut h = 2.0 * alpha / steps as f64;
    let mut cand = vec![0.0; d];
    while h > 1e-9 * alpha {
        loop {
            let mut move_best: Option<(f64, Vec<f64>)> = None;
            for s in &stencil {
                for ((c, b), k) in cand.iter_mut().zip(&best).zip(s) {
                    *c = b + h * k;
                }
                retract(&mut cand);
                let g = gain(&best, &cand);
                if g < 0.0 && move_best.as_ref().is_none_or(|(m, _)| g < *m) {
                    move_best = Some((g, cand.clone()));
                }
            }
            match move_best {
                Some((_, c)) => best = c,
                None => break,
            }
        }
        h *= 0.5;
    }

    // Exact line searches along the boundary: move mass `t` from
    // coordinate `j` to `i` without changing signs, which keeps `‖p‖₁`.
    retract(&mut best);
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                if i == j || best[j] == 0.0 {
                    continue;
                }
                let sj = best[j].signum();
                for si in [1.0, -1.0] {
                    if best[i] != 0.0 && best[i].signum() != si {
                        continue;
                    }
                    // f(b + t(si e_i − sj e_j)) is minimized at t*.
                    let t = -(si * (best[i] - eta[i]) - sj * (best[j] - eta[j])) / 2.0;
                    let lo = if best[i] == 0.0 { 0.0 } else { -best[i].abs() };
                    let t = t.clamp(lo, best[j].abs());
                    if t != 0.0 && (t > 0.0 || best[i] != 0.0) {
                        best[i] += si * t;
                        best[j] -= sj * t;
                        moved = moved.max(t.abs());
                    }
                }
            }
        }
        if moved == 0.0 {
            break;
        }
    }
    best
}

/// Minimizer of `½(v − ṽ)² + ½(σ − σ̃)² + γ φ(v, σ)` over a 2-D grid,
/// refined by shrinking local grids.
pub fn grid_perspective_prox(vt: f64, st: f64, gamma: f64) -> (f64, f64) {
    let phi = |v: f64, s: f64| -> f64 {
        if s > 0.0 {
            v * v / (2.0 * s) + s / 2.0
        } else if s == 0.0 && v == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let obj = |v: f64, s: f64| 0.5 * (v - vt).powi(2) + 0.5 * (s - st).powi(2) + gamma * phi(v, s);
    let span = vt.abs() + st.abs() + gamma + 1.0;
    let mut best = (0.0, 0.0, obj(0.0, 0.0));
    let n = 200;
    for i in 0..=n {
        for j in 0..=n {
            let v = -span + 2.0 * span * i as f64 / n as f64;
            let s = span * j as f64 / n as f64;
            let f = obj(v, s);
            if f < best.2 {
                best = (v, s, f);
            }
        }
    }
    // Local grids of half-width `2h`, shrunk only once the centre stays put.
    let mut h = 2.0 * span / n as f64;
    while h > 1e-11 {
        let (cv, cs, _) = best;
        for i in -10..=10 {
            for j in -10..=10 {
                let v = cv + h * i as f64 / 5.0;
                let s = (cs + h * j as f64 / 5.0).max(0.0);
                let f = obj(v, s);
                if f < best.2 {
                    best = (v, s, f);
                }
            }
        }
        if best.0 == cv && best.1 == cs {
            h *= 0.25;
        }
    }
    (best.0, best.1)
}

/// Sort-based Euclidean projection onto the ℓ1 ball.
fn l1_ball(x: &[f64], alpha: f64) -> Vec<f64> {
    if norm1(x) <= alpha {
        return x.to_vec();
    }
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_by(|p, q| q.total_cmp(p));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &v) in a.iter().enumerate() {
        cum += v;
        let t = (cum - alpha) / (i + 1) as f64;
        if v > t {
            theta = t;
        }
    }
    x.iter()
        .map(|v| v.signum() * (v.abs() - theta).max(0.0))
        .collect()
}

/// Solves `(I + λ Dᵀ diag(w) D) x = y` with `D` the forward difference,
/// by the Thomas algorithm.
fn tridiagonal_smooth(y: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let mut diag = vec![1.0; n];
    let mut off = vec![0.0; n - 1];
    for k in 0..n - 1 {
        diag[k] += lambda * w[k];
        diag[k + 1] += lambda * w[k];
        off[k] = -lambda * w[k];
    }
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    c[0] = off[0] / diag[0];
    d[0] = y[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / m;
        }
        d[i] = (y[i] - off[i - 1] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Reference optimum of the 1D denoising problem with quadratic loss,
/// `½‖y − x‖² + λ min{ Σ φ((Dx)_k, σ_k) : ‖Dσ‖₁ ≤ α }`.
///
/// For fixed `σ > 0` the minimizing `x` solves a tridiagonal system, and
/// the remaining function of `σ` is convex and differentiable with
/// `∂/∂σ_k = λ(½ − z_k² / (2σ_k²))`, `z = Dx`. It is minimized by projected
/// gradient descent with backtracking in the coordinates `(σ_1, Dσ)`,
/// where the constraint is an ℓ1 ball. Returns the objective value.
pub struct ReducedReference {
    pub value: f64,
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn reduced_reference(y: &[f64], lambda: f64, alpha: f64, steps: usize) -> ReducedReference {
    let n = y.len();
    let k = n - 1;
    let eval = |s0: f64, d: &[f64]| -> Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut sigma = Vec::with_capacity(k);
        let mut acc = s0;
        sigma.push(acc);
        for dj in d {
            acc += dj;
            sigma.push(acc);
        }
        if sigma.iter().any(|&s| !(s > 0.0)) {
            return None;
        }
        let w: Vec<f64> = sigma.iter().map(|s| 1.0 / s).collect();
        let x = tridiagonal_smooth(y, &w, lambda);
        let z: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
        let fit: f64 = 0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let pen: f64 = z
            .iter()
            .zip(&sigma)
            .map(|(zi, si)| zi * zi / (2.0 * si) + si / 2.0)
            .sum();
        let g: Vec<f64> = z
            .iter()
            .zip(&sigma)
            .map(|(zi, si)| lambda * (0.5 - zi * zi / (2.0 * si * si)))
            .collect();
        Some((fit + lambda * pen, x, sigma, g))
    };

    let dy: Vec<f64> = y.windows(2).map(|p| p[1] - p[0]).collect();
    let mut s0 = norm2(&dy) / (k as f64).sqrt() + 1e-3;
    let mut d = vec![0.0; k - 1];
    let (mut f, mut x, mut sigma, mut g) = eval(s0, &d).expect("constant start is feasible");
    let mut t = 1.0;
    for _ in 0..steps {
        // Chain rule through σ_k = σ_1 + Σ_{j<k} d_j.
        let g0: f64 = g.iter().sum();
        let mut gd = vec![0.0; k - 1];
        let mut tail = 0.0;
        for j in (0..k - 1).rev() {
            tail += g[j + 1];
            gd[j] = tail;
        }
        loop {
            let s0n = s0 - t * g0;
            let raw: Vec<f64> = d.iter().zip(&gd).map(|(a, b)| a - t * b).collect();
            let dn = l1_ball(&raw, alpha);
            if let Some((fn_, xn, sn, gn)) = eval(s0n, &dn) {
                let step: Vec<f64> = std::iter::once(s0n - s0)
                    .chain(dn.iter().zip(&d).map(|(a, b)| a - b))
                    .collect();
                let lin: f64 =
                    g0 * step[0] + gd.iter().zip(&step[1..]).map(|(a, b)| a * b).sum::<f64>();
                let quad: f64 = step.iter().map(|v| v * v).sum::<f64>() / (2.0 * t);
                if fn_ <= f + lin + quad {
                    s0 = s0n;
                    d = dn;
                    (f, x, sigma, g) = (fn_, xn, sn, gn);
                    t *= 1.5;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-300 {
                return ReducedReference { value: f, x, sigma };
            }
        }
    }
    ReducedReference { value: f, x, sigma }
}

/// A tiny seeded denoising instance: a two-level step plus uniform noise.
pub fn tiny_signal(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    let jump = n / 2 + (seed as usize % 3);
    (0..n)
        .map(|i| if i < jump.min(n - 1) { 0.0 } else { 1.0 } + 0.3 * (r.random::<f64>() - 0.5))
        .collect()
}
