//! Adaptive block-sparse regularization under arbitrary linear transforms.
//!
//! Solves
//!
//! ```text
//! min_x  f(Lx) + λ Ψ_α(Rx),   Ψ_α(z) = min { Σ φ(z_k, σ_k) : ‖Dσ‖₁ ≤ α }
//! ```
//!
//! where `φ(x, τ) = x²/(2τ) + τ/2` and `σ` is a latent vector whose level
//! sets describe the block structure of `Rx`. `R` need not be invertible,
//! so block sparsity of e.g. a signal's derivative can be exploited.

pub mod cli;
pub mod error;
pub mod io;
pub mod linops;
pub mod prox;
pub mod signals;
pub mod solver;

pub use error::{Error, Result};
