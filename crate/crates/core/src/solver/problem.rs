use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linops::{make_diff_1d, make_diff_2d, BlockDiagonal, Identity, OpRef, StackLayout};
use crate::prox;

/// Data-fit term `f(Lx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    /// `½‖y − Lx‖²`
    Quadratic,
    /// `‖y − Lx‖₁`
    Absolute,
}

impl Loss {
    pub fn value(&self, lx: &[f64], y: &[f64]) -> f64 {
        let res = lx.iter().zip(y).map(|(a, b)| a - b);
        match self {
            Loss::Quadratic => 0.5 * res.map(|r| r * r).sum::<f64>(),
            Loss::Absolute => res.map(f64::abs).sum(),
        }
    }

    /// Prox of `tau * f` written into `u_tilde`.
    pub(crate) fn prox_in_place(&self, u_tilde: &mut [f64], y: &[f64], tau: f64) {
        match self {
            Loss::Quadratic => {
                let s = 1.0 / (1.0 + tau);
                for (u, yi) in u_tilde.iter_mut().zip(y) {
                    *u = (*u + tau * yi) * s;
                }
            }
            Loss::Absolute => {
                for (u, yi) in u_tilde.iter_mut().zip(y) {
                    *u = yi + prox::soft_threshold_scalar(*u - yi, tau);
                }
            }
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Quadratic => "quadratic",
            Loss::Absolute => "absolute",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quadratic" | "l2" | "squared" => Ok(Loss::Quadratic),
            "absolute" | "l1" => Ok(Loss::Absolute),
            other => Err(Error::Parameter(format!("unknown loss `{other}`"))),
        }
    }
}

/// `min_x f(Lx) + λ Ψ_α(Rx)` where `Ψ_α(z) = min { φ̄(z, σ) : ‖D_σ σ‖₁ ≤ α }`.
///
/// `alpha = +∞` removes the constraint on `σ`, which turns the penalty
/// into `‖Rx‖₁`.
#[derive(Debug, Clone)]
pub struct LopAltProblem {
    y: Vec<f64>,
    l: OpRef,
    r: OpRef,
    d_sigma: OpRef,
    loss: Loss,
    lambda: f64,
    alpha: f64,
}

impl LopAltProblem {
    pub fn new(
        y: Vec<f64>,
        l: OpRef,
        r: OpRef,
        d_sigma: OpRef,
        loss: Loss,
        lambda: f64,
        alpha: f64,
    ) -> Result<Self> {
        check_len("observation y", y.len(), l.rows())?;
        if l.cols() != r.cols() {
            return Err(Error::Dimension(format!(
                "L acts on {} entries but R on {}",
                l.cols(),
                r.cols()
            )));
        }
        if d_sigma.cols() != r.rows() {
            return Err(Error::Dimension(format!(
                "D_sigma acts on {} entries but R produces {}",
                d_sigma.cols(),
                r.rows()
            )));
        }
        validate_hyper(lambda, alpha)?;
        Ok(Self {
            y,
            l,
            r,
            d_sigma,
            loss,
            lambda,
            alpha,
        })
    }

    /// Denoising a 1D signal: `L = I`, `R` the forward difference and the
    /// latent structure constrained by a second forward difference.
    pub fn denoise_1d(y: Vec<f64>, loss: Loss, lambda: f64, alpha: f64) -> Result<Self> {
        let n = y.len();
        if n < 3 {
            return Err(Error::Dimension(format!(
                "1D denoising needs at least 3 samples, got {n}"
            )));
        }
        let l: OpRef = Arc::new(Identity::new(n)?);
        let r: OpRef = Arc::new(make_diff_1d(n)?);
        let d: OpRef = Arc::new(make_diff_1d(n - 1)?);
        Self::new(y, l, r, d, loss, lambda, alpha)
    }

    /// Denoising an `h x w` row-major image with `R` the 2D forward
    /// difference. `σ` lives on the two gradient fields; each field gets its
    /// own grid difference, so blocks never straddle the two directions.
    pub fn denoise_2d(
        pixels: Vec<f64>,
        height: usize,
        width: usize,
        loss: Loss,
        lambda: f64,
        alpha: f64,
    ) -> Result<Self> {
        if height < 3 || width < 3 {
            return Err(Error::Dimension(format!(
                "2D denoising needs at least 3x3 pixels, got {height}x{width}"
            )));
        }
        check_len("image pixels", pixels.len(), height * width)?;
        let l: OpRef = Arc::new(Identity::new(height * width)?);
        let r: OpRef = Arc::new(make_diff_2d(height, width)?);
        let d: OpRef = Arc::new(sigma_difference_2d(height, width)?);
        Self::new(pixels, l, r, d, loss, lambda, alpha)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn l(&self) -> &OpRef {
        &self.l
    }
    pub fn r(&self) -> &OpRef {
        &self.r
    }
    pub fn d_sigma(&self) -> &OpRef {
        &self.d_sigma
    }
    pub fn loss(&self) -> Loss {
        self.loss
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same operators and data with new hyperparameters.
    pub fn with_hyper(&self, lambda: f64, alpha: f64) -> Result<Self> {
        validate_hyper(lambda, alpha)?;
        Ok(Self {
            lambda,
            alpha,
            ..self.clone()
        })
    }

    pub fn layout(&self) -> StackLayout {
        StackLayout {
            n: self.l.cols(),
            k: self.r.rows(),
            j: self.l.rows(),
            m: self.d_sigma.rows(),
        }
    }

    /// Objective `f(Lx) + λ Ψ_α(Rx)`, with the inner minimization over `σ`
    /// solved to `tol`.
    pub fn objective(&self, x: &[f64], tol: f64) -> Result<f64> {
        check_len("objective x", x.len(), self.l.cols())?;
        let fit = self.loss.value(&self.l.apply(x), &self.y);
        if self.lambda == 0.0 {
            return Ok(fit);
        }
        let z = self.r.apply(x);
        let pen = super::penalty::evaluate_penalty(&z, self.alpha, self.d_sigma.as_ref(), tol)?;
        Ok(fit + self.lambda * pen)
    }
}

/// The latent-structure difference used by [`LopAltProblem::denoise_2d`].
pub fn sigma_difference_2d(height: usize, width: usize) -> Result<BlockDiagonal> {
    BlockDiagonal::new(vec![
        Arc::new(make_diff_2d(height - 1, width)?) as OpRef,
        Arc::new(make_diff_2d(height, width - 1)?) as OpRef,
    ])
}

fn validate_hyper(lambda: f64, alpha: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Parameter(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(())
}
