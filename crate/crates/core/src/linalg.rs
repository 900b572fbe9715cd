//! Per-slice dense linear algebra on Fourier-domain frontal slices.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) type CMatrix = DMatrix<Complex64>;

pub(crate) fn slice_to_matrix(n1: usize, n2: usize, slice: &[Complex64]) -> CMatrix {
    CMatrix::from_column_slice(n1, n2, slice)
}

/// Thin SVD `m = U diag(s) V^H` with singular values in nonincreasing order.
/// `real` routes the computation through a real SVD of `Re(m)`; callers use
/// it for the self-conjugate slices so their factors stay exactly real.
pub(crate) struct ThinSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    /// Right singular vectors as columns (not the adjoint).
    pub v: CMatrix,
}

pub(crate) fn thin_svd(m: &CMatrix, real: bool, slice: usize) -> Result<ThinSvd> {
    let fail = |_| Error::SvdFailure { slice };
    let (r, c) = m.shape();
    if real {
        let a = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)].re);
        let svd = a.thin_svd().map_err(fail)?;
        let (u, v) = (svd.U(), svd.V());
        Ok(ThinSvd {
            u: CMatrix::from_fn(r, u.ncols(), |i, j| Complex64::new(u[(i, j)], 0.0)),
            s: svd.S().column_vector().iter().copied().collect(),
            v: CMatrix::from_fn(c, v.ncols(), |i, j| Complex64::new(v[(i, j)], 0.0)),
        })
    } else {
        let a = faer::Mat::<Complex64>::from_fn(r, c, |i, j| m[(i, j)]);
        let svd = a.thin_svd().map_err(fail)?;
        let (u, v) = (svd.U(), svd.V());
        Ok(ThinSvd {
            u: CMatrix::from_fn(r, u.ncols(), |i, j| u[(i, j)]),
            s: svd.S().column_vector().iter().map(|z| z.re).collect(),
            v: CMatrix::from_fn(c, v.ncols(), |i, j| v[(i, j)]),
        })
    }
}

pub(crate) fn singular_values(m: &CMatrix, slice: usize) -> Result<Vec<f64>> {
    let (r, c) = m.shape();
    let a = faer::Mat::<Complex64>::from_fn(r, c, |i, j| m[(i, j)]);
    a.singular_values()
        .map_err(|_| Error::SvdFailure { slice })
}

/// Extends the orthonormal columns of `q` to a unitary `n x n` matrix.
pub(crate) fn complete_basis(q: &CMatrix) -> CMatrix {
    let (n, r) = q.shape();
    if r >= n {
        return q.clone();
    }
    let mut stacked = CMatrix::zeros(n, r + n);
    stacked.columns_mut(0, r).copy_from(q);
    for i in 0..n {
        stacked[(i, r + i)] = Complex64::new(1.0, 0.0);
    }
    // The first r Householder columns span the same space as q, so the
    // trailing ones are an orthonormal basis of its complement.
    let mut full = stacked.qr().q();
    full.columns_mut(0, r).copy_from(q);
    full
}

/// Same as [`complete_basis`] but stays in real arithmetic for real input.
pub(crate) fn complete_basis_real(q: &CMatrix) -> CMatrix {
    let (n, r) = q.shape();
    if r >= n {
        return q.clone();
    }
    let mut stacked = DMatrix::<f64>::zeros(n, r + n);
    for j in 0..r {
        for i in 0..n {
            stacked[(i, j)] = q[(i, j)].re;
        }
    }
    for i in 0..n {
        stacked[(i, r + i)] = 1.0;
    }
    let mut full = stacked.qr().q().map(|x| Complex64::new(x, 0.0));
    full.columns_mut(0, r).copy_from(q);
    full
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completed_basis_is_unitary() {
        let m = CMatrix::from_fn(5, 2, |i, j| Complex64::new((i + j) as f64, (i * j) as f64 - 1.0));
        let svd = thin_svd(&m, false, 0).unwrap();
        let full = complete_basis(&svd.u);
        assert_eq!(full.shape(), (5, 5));
        let gram = full.adjoint() * &full;
        let err = (gram - CMatrix::identity(5, 5)).norm();
        assert!(err < 1e-12, "{err}");
        assert_eq!(full.columns(0, 2), svd.u.columns(0, 2));
    }

    #[test]
    fn thin_svd_values_are_sorted() {
        for (r, c, real) in [(7, 4, false), (3, 9, true), (6, 6, false)] {
            let m = CMatrix::from_fn(r, c, |i, j| {
                let im = if real { 0.0 } else { ((i * j) % 3) as f64 };
                Complex64::new(((i * 5 + j * 11) % 7) as f64 - 3.0, im)
            });
            let svd = thin_svd(&m, real, 0).unwrap();
            assert_eq!(svd.s.len(), r.min(c));
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            let mut us = svd.u.clone();
            for (k, s) in svd.s.iter().enumerate() {
                us.column_mut(k).scale_mut(*s);
            }
            assert!((us * svd.v.adjoint() - &m).norm() < 1e-12 * m.norm());
        }
    }

    #[test]
    fn singular_values_are_sorted() {
        let m = CMatrix::from_fn(4, 6, |i, j| Complex64::new(((i * 7 + j * 3) % 5) as f64, 0.5 * j as f64));
        let s = singular_values(&m, 0).unwrap();
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }
}
