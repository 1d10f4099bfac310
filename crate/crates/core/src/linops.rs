//! Matrix-free linear operators over real vectors.
//!
//! Every operator knows its shape and can apply itself and its adjoint
//! (the transpose, since only the real field is supported). Images are
//! vectorized row-major: pixel `(i, j)` of an `h x w` image sits at `i * w + j`.

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};

/// Shared handle to an operator. Operators are immutable once built.
pub type OpRef = Arc<dyn LinearOperator>;

/// Seed used for the power-iteration start vector unless one is supplied.
pub const DEFAULT_NORM_SEED: u64 = 0x5eed_0f_0b;

pub trait LinearOperator: Debug + Send + Sync {
    /// Output dimension.
    fn rows(&self) -> usize;
    /// Input dimension.
    fn cols(&self) -> usize;

    /// `out = A x`. `out` is overwritten.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    /// `out = A^T y`. `out` is overwritten.
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);

    /// Exact spectral norm when it is available in closed form.
    fn known_norm(&self) -> Option<f64> {
        None
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols(), "apply: input length");
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        out
    }

    fn adjoint_apply(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows(), "adjoint_apply: input length");
        let mut out = vec![0.0; self.cols()];
        self.adjoint_into(y, &mut out);
        out
    }
}

/// Checked application returning a dimension error instead of panicking.
pub fn try_apply(op: &dyn LinearOperator, x: &[f64]) -> Result<Vec<f64>> {
    check_len("operator input", x.len(), op.cols())?;
    Ok(op.apply(x))
}

/// Checked adjoint application.
pub fn try_adjoint_apply(op: &dyn LinearOperator, y: &[f64]) -> Result<Vec<f64>> {
    check_len("adjoint input", y.len(), op.rows())?;
    Ok(op.adjoint_apply(y))
}

#[derive(Debug, Clone)]
pub struct Identity {
    n: usize,
}

impl Identity {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("identity of size 0".into()));
        }
        Ok(Self { n })
    }
}

impl LinearOperator for Identity {
    fn rows(&self) -> usize {
        self.n
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
    fn known_norm(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// `c * A` for a scalar `c`.
#[derive(Debug, Clone)]
pub struct Scaled {
    inner: OpRef,
    factor: f64,
}

impl Scaled {
    pub fn new(inner: OpRef, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl LinearOperator for Scaled {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        out.iter_mut().for_each(|o| *o *= self.factor);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.adjoint_into(y, out);
        out.iter_mut().for_each(|o| *o *= self.factor);
    }
    fn known_norm(&self) -> Option<f64> {
        self.inner.known_norm().map(|n| n * self.factor.abs())
    }
}

/// Forward differences of a 1D signal: `(Dx)_k = x_{k+1} - x_k`.
#[derive(Debug, Clone)]
pub struct Diff1d {
    n: usize,
}

impl LinearOperator for Diff1d {
    fn rows(&self) -> usize {
        self.n - 1
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, pair) in out.iter_mut().zip(x.windows(2)) {
            *o = pair[1] - pair[0];
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let m = y.len();
        out[0] = -y[0];
        for (o, pair) in out[1..m].iter_mut().zip(y.windows(2)) {
            *o = pair[0] - pair[1];
        }
        out[m] = y[m - 1];
    }
    fn known_norm(&self) -> Option<f64> {
        Some(diff_1d_norm(self.n))
    }
}

/// Spectral norm of the `(n-1) x n` forward difference: the largest
/// eigenvalue of `D D^T` is `4 sin^2((n-1) pi / (2n))`.
pub fn diff_1d_norm(n: usize) -> f64 {
    let n = n as f64;
    2.0 * ((n - 1.0) * std::f64::consts::PI / (2.0 * n)).sin()
}

pub fn make_diff_1d(n: usize) -> Result<Diff1d> {
    if n < 2 {
        return Err(Error::Dimension(format!(
            "1D difference needs at least 2 samples, got {n}"
        )));
    }
    Ok(Diff1d { n })
}

/// Forward differences on an `h x w` grid. The output holds the
/// `(h-1) x w` vertical differences followed by the `h x (w-1)`
/// horizontal differences, each block row-major.
#[derive(Debug, Clone)]
pub struct Diff2d {
    h: usize,
    w: usize,
}

impl Diff2d {
    pub fn height(&self) -> usize {
        self.h
    }
    pub fn width(&self) -> usize {
        self.w
    }
    pub fn vertical_len(&self) -> usize {
        (self.h - 1) * self.w
    }
    pub fn horizontal_len(&self) -> usize {
        self.h * (self.w - 1)
    }
}

impl LinearOperator for Diff2d {
    fn rows(&self) -> usize {
        self.vertical_len() + self.horizontal_len()
    }
    fn cols(&self) -> usize {
        self.h * self.w
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let w = self.w;
        let (vert, horiz) = out.split_at_mut(self.vertical_len());
        for ((o, lo), hi) in vert
            .chunks_exact_mut(w)
            .zip(x.chunks_exact(w))
            .zip(x[w..].chunks_exact(w))
        {
            for ((o, a), b) in o.iter_mut().zip(lo).zip(hi) {
                *o = b - a;
            }
        }
        for (o, row) in horiz.chunks_exact_mut(w - 1).zip(x.chunks_exact(w)) {
            for (o, pair) in o.iter_mut().zip(row.windows(2)) {
                *o = pair[1] - pair[0];
            }
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let (h, w) = (self.h, self.w);
        let (vert, horiz) = y.split_at(self.vertical_len());
        for (i, (o, g)) in out
            .chunks_exact_mut(w)
            .zip(horiz.chunks_exact(w - 1))
            .enumerate()
        {
            // Horizontal part: out_j = g_{j-1} - g_j with zero padding.
            o[0] = -g[0];
            for j in 1..w - 1 {
                o[j] = g[j - 1] - g[j];
            }
            o[w - 1] = g[w - 2];
            if i > 0 {
                for (o, a) in o.iter_mut().zip(&vert[(i - 1) * w..i * w]) {
                    *o += a;
                }
            }
            if i < h - 1 {
                for (o, a) in o.iter_mut().zip(&vert[i * w..(i + 1) * w]) {
                    *o -= a;
                }
            }
        }
    }
    fn known_norm(&self) -> Option<f64> {
        // D^T D is a Kronecker sum of the two 1D Laplacians.
        let a = diff_1d_norm(self.h);
        let b = diff_1d_norm(self.w);
        Some((a * a + b * b).sqrt())
    }
}

pub fn make_diff_2d(h: usize, w: usize) -> Result<Diff2d> {
    if h < 2 || w < 2 {
        return Err(Error::Dimension(format!(
            "2D difference needs at least 2x2 pixels, got {h}x{w}"
        )));
    }
    Ok(Diff2d { h, w })
}

/// Dense row-major matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("dense matrix with an empty side".into()));
        }
        check_len("dense matrix data", data.len(), rows * cols)?;
        Ok(Self { rows, cols, data })
    }

    /// Materializes any operator by applying it to the canonical basis.
    pub fn from_operator(op: &dyn LinearOperator) -> Self {
        let (rows, cols) = (op.rows(), op.cols());
        let mut data = vec![0.0; rows * cols];
        let mut e = vec![0.0; cols];
        let mut col = vec![0.0; rows];
        for j in 0..cols {
            e[j] = 1.0;
            op.apply_into(&e, &mut col);
            for i in 0..rows {
                data[i * cols + j] = col[i];
            }
            e[j] = 0.0;
        }
        Self { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }
}

/// Block-diagonal operator `diag(A_1, ..., A_m)`.
#[derive(Debug, Clone)]
pub struct BlockDiagonal {
    blocks: Vec<OpRef>,
    rows: usize,
    cols: usize,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<OpRef>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Dimension(
                "block-diagonal operator with no blocks".into(),
            ));
        }
        let rows = blocks.iter().map(|b| b.rows()).sum();
        let cols = blocks.iter().map(|b| b.cols()).sum();
        Ok(Self { blocks, rows, cols })
    }
}

impl LinearOperator for BlockDiagonal {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (mut xo, mut yo) = (0, 0);
        for b in &self.blocks {
            let (c, r) = (b.cols(), b.rows());
            b.apply_into(&x[xo..xo + c], &mut out[yo..yo + r]);
            xo += c;
            yo += r;
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let (mut xo, mut yo) = (0, 0);
        for b in &self.blocks {
            let (c, r) = (b.cols(), b.rows());
            b.adjoint_into(&y[yo..yo + r], &mut out[xo..xo + c]);
            xo += c;
            yo += r;
        }
    }
    fn known_norm(&self) -> Option<f64> {
        self.blocks
            .iter()
            .map(|b| b.known_norm())
            .try_fold(0.0_f64, |acc, n| n.map(|n| acc.max(n)))
    }
}

/// The constraint matrix of the split problem, acting on the stacked
/// primal vector `w = (x, sigma, u, v, eta)`:
///
/// ```text
/// H w = ( mu1 (L x - u),  mu2 (R x - v),  mu3 (D sigma - eta) )
/// ```
#[derive(Debug, Clone)]
pub struct StackedConstraintOperator {
    l: OpRef,
    r: OpRef,
    d: OpRef,
    mu: [f64; 3],
}

/// Offsets of the five primal blocks inside `w` and the three dual blocks
/// inside `H w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackLayout {
    pub n: usize,
    pub k: usize,
    pub j: usize,
    pub m: usize,
}

impl StackLayout {
    pub fn primal_len(&self) -> usize {
        self.n + self.k + self.j + self.k + self.m
    }
    pub fn dual_len(&self) -> usize {
        self.j + self.k + self.m
    }
    /// Splits a primal vector into `(x, sigma, u, v, eta)`.
    pub fn split_primal<'a>(&self, w: &'a [f64]) -> [&'a [f64]; 5] {
        let (x, rest) = w.split_at(self.n);
        let (s, rest) = rest.split_at(self.k);
        let (u, rest) = rest.split_at(self.j);
        let (v, e) = rest.split_at(self.k);
        [x, s, u, v, e]
    }
    /// Splits a dual vector into `(r1, r2, r3)`.
    pub fn split_dual<'a>(&self, r: &'a [f64]) -> [&'a [f64]; 3] {
        let (a, rest) = r.split_at(self.j);
        let (b, c) = rest.split_at(self.k);
        [a, b, c]
    }
}

impl StackedConstraintOperator {
    pub fn new(l: OpRef, r: OpRef, d: OpRef, mu1: f64, mu2: f64, mu3: f64) -> Result<Self> {
        if l.cols() != r.cols() {
            return Err(Error::Dimension(format!(
                "L has {} columns but R has {}",
                l.cols(),
                r.cols()
            )));
        }
        if d.cols() != r.rows() {
            return Err(Error::Dimension(format!(
                "D acts on {} entries but R produces {}",
                d.cols(),
                r.rows()
            )));
        }
        for (name, mu) in [("mu1", mu1), ("mu2", mu2), ("mu3", mu3)] {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{name} must be positive, got {mu}"
                )));
            }
        }
        Ok(Self {
            l,
            r,
            d,
            mu: [mu1, mu2, mu3],
        })
    }

    pub fn layout(&self) -> StackLayout {
        StackLayout {
            n: self.l.cols(),
            k: self.r.rows(),
            j: self.l.rows(),
            m: self.d.rows(),
        }
    }
}

impl LinearOperator for StackedConstraintOperator {
    fn rows(&self) -> usize {
        self.layout().dual_len()
    }
    fn cols(&self) -> usize {
        self.layout().primal_len()
    }
    fn apply_into(&self, w: &[f64], out: &mut [f64]) {
        let lay = self.layout();
        let [x, s, u, v, e] = lay.split_primal(w);
        let [mu1, mu2, mu3] = self.mu;
        let (o1, rest) = out.split_at_mut(lay.j);
        let (o2, o3) = rest.split_at_mut(lay.k);
        self.l.apply_into(x, o1);
        self.r.apply_into(x, o2);
        self.d.apply_into(s, o3);
        for (o, ui) in o1.iter_mut().zip(u) {
            *o = mu1 * (*o - ui);
        }
        for (o, vi) in o2.iter_mut().zip(v) {
            *o = mu2 * (*o - vi);
        }
        for (o, ei) in o3.iter_mut().zip(e) {
            *o = mu3 * (*o - ei);
        }
    }
    fn adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        let lay = self.layout();
        let [r1, r2, r3] = lay.split_dual(r);
        let [mu1, mu2, mu3] = self.mu;
        let (x, rest) = out.split_at_mut(lay.n);
        let (s, rest) = rest.split_at_mut(lay.k);
        let (u, rest) = rest.split_at_mut(lay.j);
        let (v, e) = rest.split_at_mut(lay.k);

        self.l.adjoint_into(r1, x);
        let mut tmp = vec![0.0; lay.n];
        self.r.adjoint_into(r2, &mut tmp);
        for (xi, ti) in x.iter_mut().zip(&tmp) {
            *xi = mu1 * *xi + mu2 * ti;
        }
        self.d.adjoint_into(r3, s);
        s.iter_mut().for_each(|si| *si *= mu3);
        for (o, ri) in u.iter_mut().zip(r1) {
            *o = -mu1 * ri;
        }
        for (o, ri) in v.iter_mut().zip(r2) {
            *o = -mu2 * ri;
        }
        for (o, ri) in e.iter_mut().zip(r3) {
            *o = -mu3 * ri;
        }
    }
}

/// Result of a spectral-norm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest singular value of `op`, by power iteration on `A^T A` with a
/// seeded start vector. Operators with a closed-form norm skip the iteration.
pub fn operator_norm(op: &dyn LinearOperator, tol: f64, max_iter: usize) -> NormEstimate {
    operator_norm_seeded(op, tol, max_iter, DEFAULT_NORM_SEED)
}

pub fn operator_norm_seeded(
    op: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> NormEstimate {
    if let Some(value) = op.known_norm() {
        return NormEstimate {
            value,
            iterations: 0,
            converged: true,
        };
    }
    power_iteration(op, tol, max_iter, seed)
}

/// Power iteration without the closed-form shortcut.
pub fn power_iteration(
    op: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> NormEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..op.cols()).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut av = vec![0.0; op.rows()];
    let mut z = vec![0.0; op.cols()];
    let mut best = 0.0_f64;
    let mut prev = 0.0_f64;
    for it in 1..=max_iter {
        op.apply_into(&v, &mut av);
        op.adjoint_into(&av, &mut z);
        let nz = norm2(&z);
        // `‖A^T A v‖ ≤ ‖A‖²` for unit `v`, and it approaches the bound
        // faster than `‖Av‖²`.
        let est = nz.sqrt().max(norm2(&av));
        best = best.max(est);
        if nz == 0.0 {
            return NormEstimate {
                value: best,
                iterations: it,
                converged: true,
            };
        }
        if it > 1 && (est - prev).abs() <= tol * est {
            return NormEstimate {
                value: best,
                iterations: it,
                converged: true,
            };
        }
        prev = est;
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = zi / nz;
        }
    }
    NormEstimate {
        value: best,
        iterations: max_iter,
        converged: false,
    }
}

/// Relative adjoint mismatch `|<Aa, b> - <a, A^T b>| / (|a||b| + 1)` on a
/// seeded random pair.
pub fn dot_test(op: &dyn LinearOperator, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..op.cols())
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    let b: Vec<f64> = (0..op.rows())
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    let lhs = dot(&op.apply(&a), &b);
    let rhs = dot(&a, &op.adjoint_apply(&b));
    (lhs - rhs).abs() / (norm2(&a) * norm2(&b) + 1.0)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
