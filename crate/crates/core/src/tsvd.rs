//! The t-SVD and the rank / norm quantities built on it.
//!
//! A real tensor `X` factors as `X = U * S * V^H` with orthogonal `U`, `V` and
//! f-diagonal `S`. The factorization is computed one Fourier-domain frontal
//! slice at a time. For real input only slices `0..=n3/2` are decomposed; the
//! remaining slices are conjugates of their mirror partners, and the
//! self-conjugate slices go through a real SVD, so the inverse transforms are
//! real by construction.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{
    complete_basis, complete_basis_real, singular_values, slice_to_matrix, thin_svd,
};
use crate::spectral::{
    dft_mode3, idft_mode3, independent_slices, self_conjugate_slices, SpectralTensor3,
};
use crate::tensor::{Dims, Tensor3};

/// Default relative tolerance for [`tubal_rank`] and [`multi_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Factors of `x = u * s * v^H`.
#[derive(Clone, Debug)]
pub struct TsvdFactors {
    /// `n1 x n1 x n3`, orthogonal.
    pub u: Tensor3,
    /// `n1 x n2 x n3`, f-diagonal.
    pub s: Tensor3,
    /// `n2 x n2 x n3`, orthogonal.
    pub v: Tensor3,
}

impl TsvdFactors {
    /// Diagonal of each Fourier-domain slice of `s`, recovered by transforming
    /// `s` back. Indexed `[slice][i]`.
    pub fn fourier_diagonals(&self) -> Vec<Vec<f64>> {
        let Dims { n1, n2, n3 } = self.s.dims();
        let fs = dft_mode3(&self.s);
        (0..n3)
            .map(|k| (0..n1.min(n2)).map(|i| fs.get(i, i, k).re).collect())
            .collect()
    }
}

fn is_self_conjugate(k: usize, n3: usize) -> bool {
    self_conjugate_slices(n3).any(|s| s == k)
}

/// Computes the t-SVD of `x`.
pub fn tsvd(x: &Tensor3) -> Result<TsvdFactors> {
    let Dims { n1, n2, n3 } = x.dims();
    let fx = dft_mode3(x);
    let per_slice: Vec<_> = (0..independent_slices(n3))
        .into_par_iter()
        .map(|k| {
            let real = is_self_conjugate(k, n3);
            let m = slice_to_matrix(n1, n2, fx.slice(k));
            let svd = thin_svd(&m, real, k)?;
            let (u, v) = if real {
                (complete_basis_real(&svd.u), complete_basis_real(&svd.v))
            } else {
                (complete_basis(&svd.u), complete_basis(&svd.v))
            };
            Ok((u, svd.s, v))
        })
        .collect::<Result<_>>()?;

    let mut fu = SpectralTensor3::zeros(Dims::new(n1, n1, n3)?);
    let mut fs = SpectralTensor3::zeros(x.dims());
    let mut fv = SpectralTensor3::zeros(Dims::new(n2, n2, n3)?);
    for (k, (u, s, v)) in per_slice.iter().enumerate() {
        fu.slice_mut(k).copy_from_slice(u.as_slice());
        fv.slice_mut(k).copy_from_slice(v.as_slice());
        let slice = fs.slice_mut(k);
        for (i, &sv) in s.iter().enumerate() {
            slice[i + n1 * i] = Complex64::new(sv, 0.0);
        }
    }
    for t in [&mut fu, &mut fs, &mut fv] {
        t.enforce_conjugate_symmetry();
    }
    Ok(TsvdFactors {
        u: idft_mode3(&fu)?,
        s: idft_mode3(&fs)?,
        v: idft_mode3(&fv)?,
    })
}

/// Singular values of every Fourier-domain slice, `[slice][i]`, nonincreasing
/// within a slice. Mirrored slices reuse their partner's values.
pub(crate) fn fourier_singular_values(fx: &SpectralTensor3) -> Result<Vec<Vec<f64>>> {
    let Dims { n1, n2, n3 } = fx.dims();
    let half: Vec<Vec<f64>> = (0..independent_slices(n3))
        .into_par_iter()
        .map(|k| singular_values(&slice_to_matrix(n1, n2, fx.slice(k)), k))
        .collect::<Result<_>>()?;
    Ok((0..n3)
        .map(|k| half[k.min(n3 - k)].clone())
        .collect())
}

/// Number of nonzero tubes of `S`: tubes whose norm exceeds `tol` times the
/// largest tube norm.
pub fn tubal_rank(x: &Tensor3, tol: f64) -> Result<usize> {
    let svals = fourier_singular_values(&dft_mode3(x))?;
    let n3 = svals.len() as f64;
    let r = svals[0].len();
    // Parseval: the tube S(i,i,:) has squared norm sum_k sv_k[i]^2 / n3.
    let tube_norms: Vec<f64> = (0..r)
        .map(|i| (svals.iter().map(|s| s[i] * s[i]).sum::<f64>() / n3).sqrt())
        .collect();
    let largest = tube_norms.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(tube_norms.iter().filter(|&&t| t > tol * largest).count())
}

/// Rank of every Fourier-domain frontal slice, counting singular values above
/// `tol` times the largest singular value over all slices.
pub fn multi_rank(x: &Tensor3, tol: f64) -> Result<Vec<usize>> {
    let svals = fourier_singular_values(&dft_mode3(x))?;
    let largest = svals
        .iter()
        .flat_map(|s| s.iter().copied())
        .fold(0.0, f64::max);
    Ok(svals
        .iter()
        .map(|s| {
            if largest == 0.0 {
                0
            } else {
                s.iter().filter(|&&v| v > tol * largest).count()
            }
        })
        .collect())
}

/// Tensor nuclear norm: the sum of the nuclear norms of all `n3`
/// Fourier-domain frontal slices, under the unnormalized forward DFT.
pub fn tnn(x: &Tensor3) -> Result<f64> {
    let Dims { n1, n2, n3 } = x.dims();
    let fx = dft_mode3(x);
    let norms: Vec<f64> = (0..n3)
        .into_par_iter()
        .map(|k| Ok(singular_values(&slice_to_matrix(n1, n2, fx.slice(k)), k)?.iter().sum()))
        .collect::<Result<_>>()?;
    Ok(norms.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{conj_transpose, identity_tensor, t_product};
    use crate::testutil::{random_tensor, rel_diff};

    fn reconstruct(f: &TsvdFactors) -> Tensor3 {
        t_product(&t_product(&f.u, &f.s).unwrap(), &conj_transpose(&f.v)).unwrap()
    }

    fn check_factors(x: &Tensor3, f: &TsvdFactors) {
        let (n1, n2, n3) = x.shape();
        let rec = reconstruct(f);
        let scale = x.frob_norm().max(1.0);
        assert!(rec.distance(x).unwrap() <= 1e-10 * scale);
        for (q, n) in [(&f.u, n1), (&f.v, n2)] {
            let gram = t_product(&conj_transpose(q), q).unwrap();
            let id = identity_tensor(n, n3).unwrap();
            assert!(gram.distance(&id).unwrap() < 1e-8 * id.frob_norm());
        }
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    if i != j {
                        assert!(f.s[(i, j, k)].abs() < 1e-10);
                    }
                }
            }
        }
        for diag in f.fourier_diagonals() {
            assert!(diag.iter().all(|&d| d >= -1e-12));
            assert!(diag.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        }
    }

    #[test]
    fn zero_tensor() {
        let x = Tensor3::zeros(3, 2, 4).unwrap();
        let f = tsvd(&x).unwrap();
        assert_eq!(f.s.max_abs(), 0.0);
        assert_eq!(reconstruct(&f).max_abs(), 0.0);
        assert_eq!(tubal_rank(&x, DEFAULT_RANK_TOL).unwrap(), 0);
        assert_eq!(multi_rank(&x, DEFAULT_RANK_TOL).unwrap(), vec![0; 4]);
        assert_eq!(tnn(&x).unwrap(), 0.0);
    }

    #[test]
    fn depth_one_is_matrix_svd() {
        let x = Tensor3::from_vec(3, 3, 1, vec![2.0, 0.0, 0.0, 0.0, -3.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let f = tsvd(&x).unwrap();
        let d: Vec<f64> = (0..3).map(|i| f.s[(i, i, 0)]).collect();
        for (got, want) in d.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((tnn(&x).unwrap() - 6.0).abs() < 1e-12);
        check_factors(&x, &f);
    }

    #[test]
    fn random_factors_satisfy_invariants() {
        for (dims, seed) in [((6, 4, 5), 1), ((4, 6, 4), 2), ((5, 5, 1), 3), ((1, 3, 2), 4)] {
            let x = random_tensor(dims.0, dims.1, dims.2, seed);
            check_factors(&x, &tsvd(&x).unwrap());
        }
    }

    #[test]
    fn ranks_of_identity() {
        let i = identity_tensor(3, 4).unwrap();
        assert_eq!(tubal_rank(&i, DEFAULT_RANK_TOL).unwrap(), 3);
        assert_eq!(multi_rank(&i, DEFAULT_RANK_TOL).unwrap(), vec![3, 3, 3, 3]);
    }

    #[test]
    fn low_tubal_rank_construction() {
        let a = random_tensor(20, 2, 6, 5);
        let b = random_tensor(2, 20, 6, 6);
        let x = t_product(&a, &b).unwrap();
        assert_eq!(tubal_rank(&x, DEFAULT_RANK_TOL).unwrap(), 2);
        let mr = multi_rank(&x, DEFAULT_RANK_TOL).unwrap();
        assert!(mr.iter().all(|&r| r <= 2));
        assert_eq!(mr.iter().copied().max(), Some(2));
    }

    #[test]
    fn tnn_two_routes_agree() {
        let x = random_tensor(4, 4, 3, 7);
        let direct = tnn(&x).unwrap();
        let via_s: f64 = tsvd(&x).unwrap().fourier_diagonals().iter().flatten().sum();
        assert!(rel_diff(direct, via_s) < 1e-8);
    }
}
