//! t-product algebra: the tensor-tensor product, conjugate transpose and the
//! identity tensor.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::slice_to_matrix;
use crate::spectral::{dft_mode3, idft_mode3, independent_slices, SpectralTensor3};
use crate::tensor::{Dims, Tensor3};

/// The t-product `a * b` of an `n1 x n2 x n3` and an `n2 x n4 x n3` tensor.
///
/// Each output tube is a sum of circular convolutions of tubes. It is computed
/// as one matrix product per Fourier-domain frontal slice; only the first
/// `n3/2 + 1` products are formed and the rest follow by conjugation.
pub fn t_product(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let (da, db) = (a.dims(), b.dims());
    if da.n2 != db.n1 || da.n3 != db.n3 {
        return Err(Error::DimensionMismatch(format!(
            "t-product of {da} and {db}"
        )));
    }
    let out_dims = Dims::new(da.n1, db.n2, da.n3)?;
    let (fa, fb) = (dft_mode3(a), dft_mode3(b));
    let products: Vec<_> = (0..independent_slices(da.n3))
        .into_par_iter()
        .map(|k| {
            let ma = slice_to_matrix(da.n1, da.n2, fa.slice(k));
            let mb = slice_to_matrix(db.n1, db.n2, fb.slice(k));
            ma * mb
        })
        .collect();
    let mut fc = SpectralTensor3::zeros(out_dims);
    for (k, prod) in products.iter().enumerate() {
        fc.slice_mut(k).copy_from_slice(prod.as_slice());
    }
    fc.enforce_conjugate_symmetry();
    idft_mode3(&fc)
}

/// `x^H`: every frontal slice transposed, slices `2..n3` (one-based) reversed.
pub fn conj_transpose(x: &Tensor3) -> Tensor3 {
    let Dims { n1, n2, n3 } = x.dims();
    let mut out = Tensor3::zeros_like_dims(Dims { n1: n2, n2: n1, n3 });
    for k in 0..n3 {
        let src = (n3 - k) % n3;
        let from = x.slice(src);
        let to = out.slice_mut(k);
        for j in 0..n2 {
            for i in 0..n1 {
                to[j + n2 * i] = from[i + n1 * j];
            }
        }
    }
    out
}

/// The `n x n x n3` identity tensor: first frontal slice is the identity
/// matrix, all others are zero.
pub fn identity_tensor(n: usize, n3: usize) -> Result<Tensor3> {
    let mut t = Tensor3::zeros(n, n, n3)?;
    for i in 0..n {
        t[(i, i, 0)] = 1.0;
    }
    Ok(t)
}
