use nalgebra::{DMatrix, DVector};

use crate::error::check_dim;
use crate::{Error, Result};

/// Singular values below `DEFAULT_RANK_TOL · σ_max` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Dense `m × d` map with its singular data cached from one full SVD.
#[derive(Clone, Debug)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    singular_values: Vec<f64>,
    sigma_max: f64,
    sigma_min_nonzero: f64,
    rank: usize,
    /// Right singular vectors for the nonzero singular values (d × rank).
    row_basis: DMatrix<f64>,
    /// Left singular vectors for the nonzero singular values (m × rank).
    left_basis: DMatrix<f64>,
    /// Orthonormal basis of ker A (d × (d − rank)).
    kernel_basis: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_RANK_TOL)
    }

    /// Builds a map from row-major entries.
    pub fn factor(entries: &[f64], m: usize, d: usize, tol: f64) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::invalid("matrix needs m, d >= 1"));
        }
        check_dim(m * d, entries.len())?;
        Self::with_tolerance(DMatrix::from_row_slice(m, d, entries), tol)
    }

    pub fn with_tolerance(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        let (m, d) = matrix.shape();
        if m == 0 || d == 0 {
            return Err(Error::invalid("matrix needs m, d >= 1"));
        }
        if !(tol > 0.0) {
            return Err(Error::invalid("rank tolerance must be positive"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }

        // Pad wide matrices with zero rows so the SVD returns all d right
        // singular vectors; the padding only adds zero singular values.
        let padded = if m < d {
            let mut p = DMatrix::zeros(d, d);
            p.rows_mut(0, m).copy_from(&matrix);
            p
        } else {
            matrix.clone()
        };
        let svd = padded.svd(true, true);
        let u = svd.u.ok_or_else(|| Error::Solver("SVD did not return U".into()))?;
        let v_t = svd.v_t.ok_or_else(|| Error::Solver("SVD did not return V^T".into()))?;
        let sv: Vec<f64> = svd.singular_values.iter().copied().collect();

        let mut order: Vec<usize> = (0..sv.len()).collect();
        order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
        let sigma_max = sv[order[0]];
        let cutoff = tol * sigma_max;
        let rank = if sigma_max > 0.0 {
            order.iter().filter(|&&i| sv[i] > cutoff).count()
        } else {
            0
        };

        let v = v_t.transpose();
        let row_basis = DMatrix::from_fn(d, rank, |r, c| v[(r, order[c])]);
        let left_basis = DMatrix::from_fn(m, rank, |r, c| u[(r, order[c])]);
        let kernel_basis = DMatrix::from_fn(d, d - rank, |r, c| v[(r, order[rank + c])]);
        let singular_values: Vec<f64> = order.iter().take(m.min(d)).map(|&i| sv[i]).collect();
        let sigma_min_nonzero = if rank > 0 { sv[order[rank - 1]] } else { 0.0 };

        Ok(LinearMap {
            matrix,
            singular_values,
            sigma_max,
            sigma_min_nonzero,
            rank,
            row_basis,
            left_basis,
            kernel_basis,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Smallest nonzero singular value, 0 for the zero map.
    pub fn sigma_min_nonzero(&self) -> f64 {
        self.sigma_min_nonzero
    }

    /// Singular values in descending order (`min(m, d)` of them).
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Smallest singular value of A as a map on ℝ^d; zero when rank < d.
    pub fn sigma_min_full(&self) -> f64 {
        if self.rank == self.cols() {
            self.sigma_min_nonzero
        } else {
            0.0
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kernel_dim(&self) -> usize {
        self.cols() - self.rank
    }

    pub fn kernel_basis(&self) -> &DMatrix<f64> {
        &self.kernel_basis
    }

    /// Orthonormal basis of (ker A)^⊥ = range(Aᵀ).
    pub fn row_space_basis(&self) -> &DMatrix<f64> {
        &self.row_basis
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        Ok(&self.matrix * x)
    }

    pub fn apply_transpose(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.rows(), y.len())?;
        Ok(self.matrix.tr_mul(y))
    }

    /// Orthogonal projection onto ker A.
    pub fn project_kernel(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        let k = &self.kernel_basis;
        Ok(k * k.tr_mul(x))
    }

    /// Orthogonal projection onto (ker A)^⊥.
    pub fn project_row_space(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        let r = &self.row_basis;
        Ok(r * r.tr_mul(x))
    }

    /// Dense matrix of the projector onto (ker A)^⊥.
    pub fn row_space_projector(&self) -> DMatrix<f64> {
        &self.row_basis * self.row_basis.transpose()
    }

    /// Minimum-norm least-squares solution A⁺b.
    pub fn pinv_apply(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.rows(), b.len())?;
        let coeffs = self.left_basis.tr_mul(b);
        let scaled = DVector::from_fn(self.rank, |i, _| coeffs[i] / self.singular_values[i]);
        Ok(&self.row_basis * scaled)
    }

    /// Minimum-norm solution of `Aᵀ y = x` in the least-squares sense.
    pub fn pinv_transpose_apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        let coeffs = self.row_basis.tr_mul(x);
        let scaled = DVector::from_fn(self.rank, |i, _| coeffs[i] / self.singular_values[i]);
        Ok(&self.left_basis * scaled)
    }

    /// Distance from `b` to range(A).
    pub fn range_residual(&self, b: &DVector<f64>) -> Result<f64> {
        check_dim(self.rows(), b.len())?;
        let coeffs = self.left_basis.tr_mul(b);
        Ok((b - &self.left_basis * coeffs).norm())
    }

    /// Components of `b` in the left singular basis (length `rank`).
    pub fn left_coefficients(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.rows(), b.len())?;
        Ok(self.left_basis.tr_mul(b))
    }

    /// `A · diag(scale)` style column operations need the raw columns.
    pub fn column(&self, j: usize) -> DVector<f64> {
        self.matrix.column(j).into_owned()
    }

    /// Submatrix of the given columns.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), idx.len(), |r, c| self.matrix[(r, idx[c])])
    }

    /// The map multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<LinearMap> {
        LinearMap::new(&self.matrix * c)
    }
}
