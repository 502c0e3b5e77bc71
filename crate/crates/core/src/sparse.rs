//! Thin wrappers over the sparse factorizations used by the solvers.

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Coordinate-format matrix builder; duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub(crate) struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<Triplet<usize, usize, f64>>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push(Triplet::new(row, col, val));
    }

    fn build(&self) -> Result<SparseColMat<usize, f64>> {
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &self.entries)
            .map_err(|e| Error::LinearAlgebra(format!("sparse assembly failed: {e:?}")))
    }
}

fn to_mat(rhs: &[f64]) -> Mat<f64> {
    Mat::from_fn(rhs.len(), 1, |i, _| rhs[i])
}

fn from_mat(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Solves `A x = b` for symmetric positive definite `A` given by its lower
/// triangle.
pub(crate) fn cholesky_solve(lower: &Triplets, rhs: &[f64]) -> Result<Vec<f64>> {
    let a = lower.build()?;
    let llt = a
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("matrix is not positive definite: {e:?}")))?;
    let x = llt.solve(to_mat(rhs));
    Ok(from_mat(&x))
}

/// Least-squares solution of the overdetermined system `A x ≈ b`.
pub(crate) fn lstsq(a: &Triplets, rhs: &[f64]) -> Result<Vec<f64>> {
    if a.nrows < a.ncols {
        return Err(Error::LinearAlgebra("least squares needs at least as many rows as columns".into()));
    }
    let m = a.build()?;
    let qr = m.sp_qr().map_err(|e| Error::LinearAlgebra(format!("sparse QR failed: {e:?}")))?;
    let x = qr.solve_lstsq(to_mat(rhs));
    Ok(from_mat(&x))
}
