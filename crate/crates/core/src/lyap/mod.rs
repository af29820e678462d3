//! Dense kernels for the covariance path: matrix exponential, Lyapunov and
//! Stein solvers, and the one-period propagator.

mod expm;
mod solve;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use expm::{matrix_exp, norm_1};
pub use solve::{
    continuous_residual, discrete_residual, eigenvalues, solve_continuous_general, solve_continuous_lyapunov,
    solve_continuous_lyapunov_with, solve_discrete_general, solve_discrete_lyapunov, solve_discrete_lyapunov_with,
    LyapunovMethod, RESIDUAL_TOL, STABILITY_TOL,
};

/// `(Q(tau), P(tau))` of the free evolution over one period:
/// `C(tau) = Q C(0) Q^T - i P Q^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodPropagator<T = f64> {
    pub q: DMatrix<T>,
    pub p: DMatrix<T>,
    /// 1-norm condition number of `q`.
    pub q_condition: T,
}

/// Integrates `dQ/dt = -X Q`, `dP/dt = -X P - Y Q^{-T}` from `Q = I`, `P = 0`
/// over `tau` with constant `X`, `Y`.
///
/// Both blocks come out of one exponential of
/// `[[-X, Y], [0, X^T]] tau = [[Q, -P], [0, Q^{-T}]]`.
pub fn propagate_period<T: Real>(x: &DMatrix<T>, y: &DMatrix<T>, tau: T) -> Result<PeriodPropagator<T>> {
    if tau <= T::zero() || !tau.is_finite() {
        return Err(Error::invalid("tau", format!("period must be > 0, got {}", tau)));
    }
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    let n = x.nrows();
    if y.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", y.nrows(), y.ncols()),
        });
    }
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(x * (-tau)));
    block.view_mut((0, n), (n, n)).copy_from(&(y * tau));
    block.view_mut((n, n), (n, n)).copy_from(&(x.transpose() * tau));
    let e = matrix_exp(&block)?;
    let q = e.view((0, 0), (n, n)).into_owned();
    let p = -e.view((0, n), (n, n)).into_owned();
    let q_inv_t = e.view((n, n), (n, n)).into_owned();
    let q_condition = T::lit(norm_1(&q) * norm_1(&q_inv_t.transpose()));
    Ok(PeriodPropagator { q, p, q_condition })
}
