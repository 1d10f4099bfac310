//! Proximal maps used by the primal-dual solver.
//!
//! All maps here are `u ↦ argmin_z g(z) + ½‖z − u‖²` for some convex `g`.

use crate::error::{check_len, Error, Result};

/// Perspective of the half squared magnitude:
/// `|x|²/(2τ) + τ/2` for `τ > 0`, `0` at the origin, `+∞` elsewhere.
pub fn phi(x: f64, tau: f64) -> f64 {
    if tau > 0.0 {
        x * x / (2.0 * tau) + tau / 2.0
    } else if x == 0.0 && tau == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Sum of `phi` over paired components.
pub fn varphi(x: &[f64], sigma: &[f64]) -> Result<f64> {
    check_len("varphi sigma", sigma.len(), x.len())?;
    // INFINITY absorbs under addition, so the sum saturates.
    Ok(x.iter().zip(sigma).map(|(&a, &s)| phi(a, s)).sum())
}

pub fn soft_threshold(x: &[f64], t: f64) -> Vec<f64> {
    x.iter().map(|&v| soft_threshold_scalar(v, t)).collect()
}

#[inline]
pub fn soft_threshold_scalar(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Prox of `τ · ½‖y − ·‖²`.
pub fn prox_quadratic_loss(u_tilde: &[f64], y: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_len("quadratic loss observation", y.len(), u_tilde.len())?;
    let s = 1.0 / (1.0 + tau);
    Ok(u_tilde
        .iter()
        .zip(y)
        .map(|(u, y)| (u + tau * y) * s)
        .collect())
}

/// Prox of `τ · ‖y − ·‖₁`.
pub fn prox_absolute_loss(u_tilde: &[f64], y: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_len("absolute loss observation", y.len(), u_tilde.len())?;
    Ok(u_tilde
        .iter()
        .zip(y)
        .map(|(u, y)| y + soft_threshold_scalar(u - y, tau))
        .collect())
}

/// Objective minimized by [`prox_perspective`].
pub fn perspective_prox_objective(
    v: f64,
    sigma: f64,
    v_tilde: f64,
    sigma_tilde: f64,
    gamma: f64,
) -> f64 {
    0.5 * (v - v_tilde).powi(2) + 0.5 * (sigma - sigma_tilde).powi(2) + gamma * phi(v, sigma)
}

/// Joint prox of `γ φ` at `(ṽ, σ̃)`.
///
/// For `σ > 0` the stationarity conditions give `v = σ ṽ / (σ + γ)` and
/// `(σ − σ̃ + γ/2)(σ + γ)² = γ ṽ² / 2`. The cubic is increasing and convex
/// to the right of `max(σ̃ − γ/2, 0)`, so a positive root is unique when it
/// exists. Otherwise the minimizer sits at the origin.
pub fn prox_perspective(v_tilde: f64, sigma_tilde: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Parameter(format!(
            "perspective prox needs gamma > 0, got {gamma}"
        )));
    }
    Ok(perspective_unchecked(v_tilde, sigma_tilde, gamma))
}

#[inline]
pub(crate) fn perspective_unchecked(v_tilde: f64, sigma_tilde: f64, gamma: f64) -> (f64, f64) {
    perspective_hinted(v_tilde, sigma_tilde, gamma, f64::NAN)
}

/// As [`perspective_unchecked`], starting the root search at `hint` when it
/// falls inside the bracket. Iterative callers pass the previous `σ`.
pub(crate) fn perspective_hinted(
    v_tilde: f64,
    sigma_tilde: f64,
    gamma: f64,
    hint: f64,
) -> (f64, f64) {
    let c = sigma_tilde - 0.5 * gamma;
    let rhs = 0.5 * gamma * v_tilde * v_tilde;
    let lo = c.max(0.0);
    let g_lo = (lo - c) * (lo + gamma) * (lo + gamma);

    let interior = if rhs == 0.0 {
        (c > 0.0).then_some((0.0, c))
    } else if g_lo < rhs {
        let s = cubic_root(c, gamma, rhs, lo, hint);
        Some((s * v_tilde / (s + gamma), s))
    } else {
        None
    };

    match interior {
        Some((v, s)) => {
            let inner = perspective_prox_objective(v, s, v_tilde, sigma_tilde, gamma);
            let origin = 0.5 * (v_tilde * v_tilde + sigma_tilde * sigma_tilde);
            if inner <= origin {
                (v, s)
            } else {
                (0.0, 0.0)
            }
        }
        None => (0.0, 0.0),
    }
}

/// Root of `(σ − c)(σ + γ)² = rhs` above `lo = max(c, 0)`, which lies
/// below `c + rhs/(lo + γ)²` since `(σ + γ)² ≥ (lo + γ)²` there.
///
/// Solved in `t = σ + γ` as `h(t) = t − (c + γ) − rhs/t² = 0`. `h` is
/// increasing and concave with `h' ≥ 1`, so Newton has no trouble when the
/// root sits close to the double root `σ = −γ` of the cubic form.
fn cubic_root(c: f64, gamma: f64, rhs: f64, lo: f64, hint: f64) -> f64 {
    let shift = c + gamma;
    let h = |t: f64| t - shift - rhs / (t * t);
    let mut a = lo + gamma;
    let mut b = (c + rhs / (a * a)).max(lo) + gamma;
    // Without a usable hint, start from a lower bound within a factor of
    // two of the root: `t ≥ max(shift, ∛rhs)` when `shift > 0`, otherwise
    // `t²(t + |shift|) = rhs` gives `t ≥ min(∛(rhs/2), √(rhs/(2|shift|)))`.
    // From the left of the root Newton climbs monotonically; from the
    // right one step lands on the left. The bracket catches rounding.
    let hint = hint + gamma;
    let mut t = if hint > a && hint < b {
        hint
    } else {
        let bound = if shift > 0.0 {
            shift.max(rough_cbrt(rhs))
        } else if shift < 0.0 {
            rough_cbrt(0.5 * rhs).min((0.5 * rhs / -shift).sqrt())
        } else {
            rough_cbrt(0.5 * rhs)
        };
        bound.clamp(a, b)
    };
    for _ in 0..100 {
        let ht = h(t);
        if ht == 0.0 {
            break;
        }
        if ht > 0.0 {
            b = t;
        } else {
            a = t;
        }
        let mut next = t - ht / (1.0 + 2.0 * rhs / (t * t * t));
        if !(next >= a && next <= b) {
            next = 0.5 * (a + b);
        }
        let done = (next - t).abs() <= 4.0 * f64::EPSILON * t;
        t = next;
        if done {
            break;
        }
    }
    (t - gamma).max(lo)
}

/// Cube root of a positive normal number to within a few percent, by
/// dividing the exponent bits by three.
#[inline]
fn rough_cbrt(x: f64) -> f64 {
    f64::from_bits(x.to_bits() / 3 + (715_094_163u64 << 32))
}

/// Componentwise [`prox_perspective`].
pub fn prox_perspective_vector(
    v_tilde: &[f64],
    sigma_tilde: &[f64],
    gamma: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("perspective prox sigma", sigma_tilde.len(), v_tilde.len())?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Parameter(format!(
            "perspective prox needs gamma > 0, got {gamma}"
        )));
    }
    Ok(v_tilde
        .iter()
        .zip(sigma_tilde)
        .map(|(&v, &s)| perspective_unchecked(v, s, gamma))
        .unzip())
}

/// Euclidean projection onto `{η : ‖η‖₁ ≤ α}`. `α = +∞` is the identity.
pub fn project_l1_ball(eta: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0) {
        return Err(Error::Parameter(format!(
            "l1 ball radius must be >= 0, got {alpha}"
        )));
    }
    let mut out = eta.to_vec();
    project_l1_ball_in_place(&mut out, alpha);
    Ok(out)
}

pub(crate) fn project_l1_ball_in_place(eta: &mut [f64], alpha: f64) {
    if alpha.is_infinite() {
        return;
    }
    let l1: f64 = eta.iter().map(|e| e.abs()).sum();
    if l1 <= alpha {
        return;
    }
    if alpha == 0.0 {
        eta.iter_mut().for_each(|e| *e = 0.0);
        return;
    }
    // (Σ_{k∈S}|η_k| − α)/|S| never exceeds the threshold for any subset S,
    // so entries at or below it are zero in the output and can be dropped
    // before sorting.
    let mut rho: Vec<f64> = eta.iter().map(|e| e.abs()).collect();
    let mut sum = l1;
    loop {
        let bound = (sum - alpha) / rho.len() as f64;
        let before = rho.len();
        rho.retain(|&r| r > bound);
        if rho.len() == before {
            break;
        }
        sum = rho.iter().sum();
    }
    rho.sort_unstable_by(|a, b| b.total_cmp(a));
    // Largest t with (Σ_{n≤t} ρ_n − α)/t < ρ_t; t = 1 always qualifies here.
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (t, &r) in rho.iter().enumerate() {
        cumsum += r;
        let candidate = (cumsum - alpha) / (t + 1) as f64;
        if candidate < r {
            theta = candidate;
        }
    }
    for e in eta.iter_mut() {
        *e = e.signum() * (e.abs() - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Coarse grid then shrinking local grids over the prox objective.
    fn grid_prox(vt: f64, st: f64, gamma: f64) -> (f64, f64) {
        let span = vt.abs() + st.abs() + gamma + 1.0;
        let obj = |v: f64, s: f64| perspective_prox_objective(v, s, vt, st, gamma);
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
        let mut h = 2.0 * span / n as f64;
        while h > 1e-9 {
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
            h *= 0.25;
        }
        (best.0, best.1)
    }

    #[test]
    fn rough_cbrt_is_close() {
        for x in [1e-300, 1e-20, 0.001, 0.5, 1.0, 7.0, 1e10, 1e300] {
            let r = rough_cbrt(x) / x.cbrt();
            assert!((0.9..1.1).contains(&r), "{x}: {r}");
        }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(0.0, 0.0), 0.0);
        assert_eq!(phi(2.0, 2.0), 2.0);
        assert_eq!(phi(1.0, 0.0), f64::INFINITY);
        assert_eq!(phi(1.0, -1.0), f64::INFINITY);
        assert_eq!(phi(-2.0, 2.0), phi(2.0, 2.0));
        assert_eq!(phi(3.0, 3.0), 3.0);
        for tau in [0.5, 1.0, 2.0, 2.9, 3.1, 10.0] {
            assert!(phi(3.0, tau) > 3.0);
        }
    }

    #[test]
    fn varphi_examples() {
        assert_eq!(varphi(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(varphi(&[2.0, 0.0], &[2.0, 0.0]).unwrap(), 2.0);
        assert_eq!(varphi(&[1.0, 1.0], &[1.0, -1.0]).unwrap(), f64::INFINITY);
        assert!(matches!(
            varphi(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn loss_prox_examples() {
        let y = [1.0, -2.0];
        assert_eq!(prox_quadratic_loss(&y, &y, 0.7).unwrap(), y.to_vec());
        assert_eq!(prox_quadratic_loss(&[2.0], &[0.0], 1.0).unwrap(), vec![1.0]);
        let tiny = prox_quadratic_loss(&[3.0], &[-5.0], 1e-12).unwrap();
        assert_abs_diff_eq!(tiny[0], 3.0, epsilon = 1e-10);

        assert_eq!(prox_absolute_loss(&y, &y, 0.7).unwrap(), y.to_vec());
        assert_eq!(prox_absolute_loss(&[3.0], &[0.0], 1.0).unwrap(), vec![2.0]);
        assert_eq!(prox_absolute_loss(&[4.0], &[5.0], 2.0).unwrap(), vec![5.0]);
        assert!(prox_absolute_loss(&[4.0], &[5.0, 1.0], 2.0).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[1.5, -2.0], 0.0), vec![1.5, -2.0]);
        assert_eq!(soft_threshold(&[3.0], 1.0), vec![2.0]);
        assert_eq!(soft_threshold(&[-0.5], 1.0), vec![0.0]);
    }

    #[test]
    fn perspective_examples() {
        assert_eq!(prox_perspective(0.0, 5.0, 2.0).unwrap(), (0.0, 4.0));
        assert_eq!(prox_perspective(0.0, -3.0, 2.0).unwrap(), (0.0, 0.0));
        let (v, s) = prox_perspective(1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!((s - 0.5) * (s + 1.0).powi(2), 0.5, epsilon = 1e-11);
        assert_abs_diff_eq!(v, 0.404, epsilon = 5e-4);
        assert_abs_diff_eq!(s, 0.67765, epsilon = 1e-5);
        let (gv, gs) = grid_prox(1.0, 1.0, 1.0);
        assert_abs_diff_eq!(v, gv, epsilon = 1e-5);
        assert_abs_diff_eq!(s, gs, epsilon = 1e-5);
        assert!(matches!(
            prox_perspective(1.0, 1.0, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            prox_perspective(1.0, 1.0, -1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn perspective_vector_matches_scalar_and_grid() {
        let (v, s) = prox_perspective_vector(&[0.0; 3], &[0.0; 3], 0.5).unwrap();
        assert_eq!(v, vec![0.0; 3]);
        assert_eq!(s, vec![0.0; 3]);

        let vt = [1.3, -0.2, 4.0, 0.0, -2.5, 0.7];
        let st = [0.4, 2.0, -1.0, 0.3, 1.5, -0.1];
        let gamma = 0.8;
        let (v, s) = prox_perspective_vector(&vt, &st, gamma).unwrap();
        for i in 0..vt.len() {
            assert_eq!((v[i], s[i]), prox_perspective(vt[i], st[i], gamma).unwrap());
            let (gv, gs) = grid_prox(vt[i], st[i], gamma);
            assert_abs_diff_eq!(v[i], gv, epsilon = 1e-5);
            assert_abs_diff_eq!(s[i], gs, epsilon = 1e-5);
        }
        assert!(prox_perspective_vector(&vt, &st[..2], gamma).is_err());
    }

    #[test]
    fn l1_projection_examples() {
        assert_eq!(project_l1_ball(&[1.0, -1.0], 3.0).unwrap(), vec![1.0, -1.0]);
        assert_eq!(project_l1_ball(&[3.0, 1.0], 2.0).unwrap(), vec![2.0, 0.0]);
        let p = project_l1_ball(&[0.5, -0.5], 0.6).unwrap();
        assert_abs_diff_eq!(p[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], -0.3, epsilon = 1e-15);
        assert_eq!(project_l1_ball(&[2.0, -1.0], 0.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            project_l1_ball(&[2.0, -1.0], f64::INFINITY).unwrap(),
            vec![2.0, -1.0]
        );
        assert!(matches!(
            project_l1_ball(&[1.0], -0.1),
            Err(Error::Parameter(_))
        ));
        assert!(project_l1_ball(&[1.0], f64::NAN).is_err());
    }

    #[test]
    fn l1_projection_ties_are_order_free() {
        let a = project_l1_ball(&[2.0, -2.0, 1.0], 2.5).unwrap();
        let b = project_l1_ball(&[1.0, 2.0, -2.0], 2.5).unwrap();
        assert_eq!(a, vec![b[1], b[2], b[0]]);
    }

    fn firm(pa: &[f64], pb: &[f64], a: &[f64], b: &[f64]) -> bool {
        let dp: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| x - y).collect();
        let lhs: f64 = dp.iter().map(|d| d * d).sum();
        let rhs: f64 = dp
            .iter()
            .zip(a.iter().zip(b))
            .map(|(d, (x, y))| d * (x - y))
            .sum();
        lhs <= rhs + 1e-9 * (1.0 + rhs.abs())
    }

    proptest! {
        #[test]
        fn perspective_sigma_nonnegative_and_firm(
            v1 in -10.0..10.0f64, s1 in -10.0..10.0f64,
            v2 in -10.0..10.0f64, s2 in -10.0..10.0f64,
            gamma in 0.01..5.0f64,
        ) {
            let (pv1, ps1) = prox_perspective(v1, s1, gamma).unwrap();
            let (pv2, ps2) = prox_perspective(v2, s2, gamma).unwrap();
            prop_assert!(ps1 >= 0.0 && ps2 >= 0.0);
            prop_assert!(firm(&[pv1, ps1], &[pv2, ps2], &[v1, s1], &[v2, s2]));
        }

        #[test]
        fn l1_projection_properties(
            eta in proptest::collection::vec(-5.0..5.0f64, 1..12),
            other in proptest::collection::vec(-5.0..5.0f64, 12),
            alpha in 0.0..8.0f64,
        ) {
            let p = project_l1_ball(&eta, alpha).unwrap();
            let l1: f64 = p.iter().map(|x| x.abs()).sum();
            let in_l1: f64 = eta.iter().map(|x| x.abs()).sum();
            if in_l1 > alpha {
                prop_assert!((l1 - alpha).abs() <= 1e-10 * (1.0 + alpha));
            } else {
                prop_assert_eq!(&p, &eta);
            }
            let again = project_l1_ball(&p, alpha).unwrap();
            for (a, b) in again.iter().zip(&p) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let b = &other[..eta.len()];
            let pb = project_l1_ball(b, alpha).unwrap();
            prop_assert!(firm(&p, &pb, &eta, b));
        }

        #[test]
        fn loss_proxes_are_firm(
            a in proptest::collection::vec(-5.0..5.0f64, 4),
            b in proptest::collection::vec(-5.0..5.0f64, 4),
            y in proptest::collection::vec(-5.0..5.0f64, 4),
            tau in 0.01..3.0f64,
        ) {
            let pa = prox_quadratic_loss(&a, &y, tau).unwrap();
            let pb = prox_quadratic_loss(&b, &y, tau).unwrap();
            prop_assert!(firm(&pa, &pb, &a, &b));
            let pa = prox_absolute_loss(&a, &y, tau).unwrap();
            let pb = prox_absolute_loss(&b, &y, tau).unwrap();
            prop_assert!(firm(&pa, &pb, &a, &b));
        }

        #[test]
        fn phi_dominates_magnitude(x in -10.0..10.0f64, tau in 0.0..20.0f64) {
            prop_assert!(phi(x, tau) >= x.abs() - 1e-12);
            prop_assert!((phi(x, x.abs()) - x.abs()).abs() <= 1e-12);
        }
    }
}
