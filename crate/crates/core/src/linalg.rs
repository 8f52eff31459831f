//! Dense lower Cholesky factors with jitter escalation and block extension.
//!
//! The heavy kernels (blocked factorization, triangular solves, symmetric
//! rank-k updates) are delegated to `faer`; this module owns the jitter
//! policy and the bookkeeping needed to grow a factor one block at a time.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{cholesky_in_place, cholesky_in_place_scratch};
use faer::linalg::matmul::triangular::{self as tri_matmul, BlockStructure};
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::reborrow::ReborrowMut;
use faer::{Accum, Mat, MatMut, MatRef, Par};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Diagonal jitter ladder, relative to the process variance.
pub const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

fn par() -> Par {
    Par::Seq
}

/// Factors `a` in place (lower triangle), zeroing the strict upper part.
/// Returns the failing pivot on error; `a` is then garbage.
fn llt_in_place<T: Real>(mut a: MatMut<'_, T>) -> std::result::Result<(), usize> {
    let n = a.nrows();
    let mut buf = MemBuffer::new(cholesky_in_place_scratch::<T>(n, par(), Default::default()));
    let stack = MemStack::new(&mut buf);
    match cholesky_in_place(a.rb_mut(), Default::default(), par(), stack, Default::default()) {
        Ok(_) => {
            for j in 1..n {
                for i in 0..j {
                    a[(i, j)] = T::zero();
                }
            }
            Ok(())
        }
        Err(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }) => Err(index),
    }
}

fn max_abs_lower<T: Real>(a: MatRef<'_, T>) -> f64 {
    let mut m = T::zero();
    for j in 0..a.ncols() {
        for i in j..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m.to_f64_lossy()
}

/// Factors `cov + jitter * scale * I`, escalating the jitter along
/// [`JITTER_LADDER`]. Returns the factor and the relative jitter used.
pub fn factor_with_jitter<T: Real>(cov: MatRef<'_, T>, scale: T) -> Result<(Mat<T>, T)> {
    let n = cov.nrows();
    let mut last_pivot = 0;
    for &j in JITTER_LADDER.iter() {
        let jitter = T::lit(j);
        let mut a = cov.to_owned();
        for i in 0..n {
            a[(i, i)] = a[(i, i)] + jitter * scale;
        }
        match llt_in_place(a.as_mut()) {
            Ok(()) => return Ok((a, jitter)),
            Err(p) => last_pivot = p,
        }
    }
    Err(Error::Factorization {
        dim: n,
        pivot: last_pivot,
        jitter: *JITTER_LADDER.last().unwrap(),
        max_abs: max_abs_lower(cov),
    })
}

/// Factors a matrix that is known to be well conditioned, without jitter.
pub fn factor_exact<T: Real>(cov: MatRef<'_, T>) -> Result<Mat<T>> {
    let mut a = cov.to_owned();
    llt_in_place(a.as_mut()).map_err(|pivot| Error::Factorization {
        dim: cov.nrows(),
        pivot,
        jitter: 0.0,
        max_abs: max_abs_lower(cov),
    })?;
    Ok(a)
}

/// A lower-triangular Cholesky factor that can grow by appending blocks.
///
/// Storage keeps spare capacity so that repeated single-point extensions do
/// not reallocate each time.
#[derive(Clone, Debug)]
pub struct CholFactor<T: Real> {
    l: Mat<T>,
    cap: usize,
}

impl<T: Real> Default for CholFactor<T> {
    fn default() -> Self {
        CholFactor {
            l: Mat::zeros(0, 0),
            cap: 0,
        }
    }
}

impl<T: Real> CholFactor<T> {
    pub fn from_lower(l: Mat<T>) -> Self {
        assert_eq!(l.nrows(), l.ncols());
        let cap = l.nrows();
        CholFactor { l, cap }
    }

    /// Factors `cov` with the jitter policy; returns the relative jitter used.
    pub fn factor(cov: MatRef<'_, T>, scale: T) -> Result<(Self, T)> {
        let (l, j) = factor_with_jitter(cov, scale)?;
        Ok((CholFactor::from_lower(l), j))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    #[inline]
    pub fn as_ref(&self) -> MatRef<'_, T> {
        self.l.as_ref()
    }

    /// Leading `k x k` block, which is the factor of the leading principal
    /// submatrix.
    pub fn leading(&self, k: usize) -> MatRef<'_, T> {
        self.l.as_ref().submatrix(0, 0, k, k)
    }

    pub fn clear(&mut self) {
        self.l.truncate(0, 0);
    }

    /// Truncates to the leading `k x k` block.
    pub fn truncate(&mut self, k: usize) {
        self.l.truncate(k, k);
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower(&self, rhs: MatMut<'_, T>) {
        solve_lower_triangular_in_place(self.l.as_ref(), rhs, par());
    }

    /// Solves `L^T x = b` in place.
    pub fn solve_upper(&self, rhs: MatMut<'_, T>) {
        solve_upper_triangular_in_place(self.l.as_ref().transpose(), rhs, par());
    }

    /// `log det(L L^T)`.
    pub fn log_det(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim() {
            acc = acc + self.l[(i, i)].ln();
        }
        acc + acc
    }

    /// Multiplies `L x` for a column vector.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        let mut out = vec![T::zero(); n];
        for j in 0..n {
            let xj = x[j];
            if xj == T::zero() {
                continue;
            }
            let col = self.l.col(j);
            for i in j..n {
                out[i] = out[i] + col[i] * xj;
            }
        }
        out
    }

    /// Appends a block of `m` new variables.
    ///
    /// `cross` is the `n x m` covariance between existing and new variables
    /// and `block` the `m x m` covariance of the new ones (lower triangle
    /// read). On success returns `W = L^{-1} cross`; the new rows of the
    /// factor are `[W^T, chol(block - W^T W)]`.
    pub fn extend(&mut self, cross: MatRef<'_, T>, block: MatRef<'_, T>, scale: T) -> Result<Mat<T>> {
        let n = self.dim();
        let m = block.nrows();
        assert_eq!(cross.nrows(), n);
        assert_eq!(cross.ncols(), m);
        let mut w = cross.to_owned();
        if n > 0 {
            self.solve_lower(w.as_mut());
        }
        let mut schur = block.to_owned();
        if n > 0 {
            tri_matmul::matmul(
                schur.as_mut(),
                BlockStructure::TriangularLower,
                Accum::Add,
                w.as_ref().transpose(),
                BlockStructure::Rectangular,
                w.as_ref(),
                BlockStructure::Rectangular,
                -T::one(),
                par(),
            );
        }
        let (ls, _) = factor_with_jitter(schur.as_ref(), scale)?;

        let new_dim = n + m;
        if new_dim > self.cap {
            let want = new_dim.max(self.cap * 2).max(16);
            self.l.reserve(want, want);
            self.cap = want;
        }
        self.l.resize_with(new_dim, new_dim, |_, _| T::zero());
        for j in 0..n {
            for i in 0..m {
                self.l[(n + i, j)] = w[(j, i)];
            }
        }
        for j in 0..m {
            for i in j..m {
                self.l[(n + i, n + j)] = ls[(i, j)];
            }
        }
        Ok(w)
    }
}
