//! Rewriting `min f(Lx) + λΨ(Rx)` in `z = Rx` when `RᵀR` is invertible.
//!
//! With `P = (RᵀR)⁻¹Rᵀ` the problem becomes `min_z f(L P z) + λΨ(z)`, the
//! identity-transform case. A difference operator has a null space and
//! cannot be reduced this way.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linops::{DenseMatrix, Identity, OpRef};

use super::problem::LopAltProblem;

/// Largest tolerated condition number of `RᵀR`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// The problem in `z`, with `R = I`.
    pub problem: LopAltProblem,
    /// `P = (RᵀR)⁻¹Rᵀ`, mapping a solution `z` back to `x = P z`.
    pub recover: DenseMatrix,
}

pub fn reduce_invertible(problem: &LopAltProblem) -> Result<ReducedProblem> {
    let r = dense(problem.r().as_ref());
    let l = dense(problem.l().as_ref());
    let gram = r.transpose() * &r;
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= max / MAX_CONDITION {
        return Err(Error::NotInvertible(format!(
            "R^T R has eigenvalues in [{min:e}, {max:e}]"
        )));
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::NotInvertible("Cholesky factorization of R^T R failed".into()))?;
    let p = chol.solve(&r.transpose());
    let l_tilde = &l * &p;

    let k = problem.r().rows();
    let reduced = LopAltProblem::new(
        problem.y().to_vec(),
        Arc::new(to_dense(&l_tilde)?) as OpRef,
        Arc::new(Identity::new(k)?) as OpRef,
        Arc::clone(problem.d_sigma()),
        problem.loss(),
        problem.lambda(),
        problem.alpha(),
    )?;
    Ok(ReducedProblem {
        problem: reduced,
        recover: to_dense(&p)?,
    })
}

fn dense(op: &dyn crate::linops::LinearOperator) -> DMatrix<f64> {
    let m = DenseMatrix::from_operator(op);
    DMatrix::from_row_slice(op.rows(), op.cols(), m.data())
}

fn to_dense(m: &DMatrix<f64>) -> Result<DenseMatrix> {
    let data: Vec<f64> = m
        .row_iter()
        .flat_map(|row| row.iter().cloned().collect::<Vec<_>>())
        .collect();
    DenseMatrix::new(m.nrows(), m.ncols(), data)
}
