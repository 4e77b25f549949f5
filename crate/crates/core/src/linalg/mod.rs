//! Small dense and banded linear algebra kernels.

mod banded;
mod dense;
mod eigen;

pub use banded::{BandedLu, BandedMatrix};
pub use dense::{DenseLu, Matrix};
pub use eigen::{eigenpair_residual, eigenvalues, smallest_singular_value, smallest_singular_value_banded};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Thomas algorithm. `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal<T: Real>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut beta = diag[0];
    if beta == T::zero() {
        return Err(Error::SingularMatrix("tridiagonal solve"));
    }
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == T::zero() || !beta.is_finite() {
            return Err(Error::SingularMatrix("tridiagonal solve"));
        }
        if i + 1 < n {
            c[i] = sup[i] / beta;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    Ok(d)
}
