//! Mode-3 discrete Fourier transform.
//!
//! The forward transform is unnormalized and the inverse carries the `1/n3`
//! factor, the same convention as MATLAB's `fft(X, [], 3)` / `ifft`. Every
//! Fourier-domain quantity in this crate (TNN, thresholding) uses the forward
//! scaling.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::{Dims, Tensor3};

/// Relative bound on the imaginary part discarded by [`idft_mode3`].
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;

/// Complex tensor holding the mode-3 DFT of a real tensor (or a product of
/// such transforms). Same storage order as [`Tensor3`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTensor3 {
    dims: Dims,
    data: Vec<Complex64>,
    from_real: bool,
}

impl SpectralTensor3 {
    pub(crate) fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            data: vec![Complex64::new(0.0, 0.0); dims.len()],
            from_real: false,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Whether the tensor came out of [`dft_mode3`] applied to real data.
    pub fn is_from_real(&self) -> bool {
        self.from_real
    }

    /// Fourier-domain frontal slice `k`, column-major `n1 x n2`.
    pub fn slice(&self, k: usize) -> &[Complex64] {
        let m = self.dims.slice_len();
        &self.data[k * m..(k + 1) * m]
    }

    pub(crate) fn slice_mut(&mut self, k: usize) -> &mut [Complex64] {
        let m = self.dims.slice_len();
        &mut self.data[k * m..(k + 1) * m]
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[self.dims.offset(i, j, k)]
    }

    /// Overwrites slices `n3/2 + 1 ..` with the conjugates of their mirror
    /// partners and drops the imaginary part of the self-conjugate slices, so
    /// the tensor is exactly the spectrum of some real tensor.
    pub(crate) fn enforce_conjugate_symmetry(&mut self) {
        let n3 = self.dims.n3;
        let m = self.dims.slice_len();
        for k in self_conjugate_slices(n3) {
            for z in self.slice_mut(k) {
                z.im = 0.0;
            }
        }
        for k in 1..n3.div_ceil(2) {
            let mirror = n3 - k;
            if mirror == k {
                continue;
            }
            let (lo, hi) = self.data.split_at_mut(mirror * m);
            for (dst, src) in hi[..m].iter_mut().zip(&lo[k * m..(k + 1) * m]) {
                *dst = src.conj();
            }
        }
        self.from_real = true;
    }

    /// Largest elementwise deviation from the conjugate-pairing property,
    /// slice `k` vs slice `n3 - k` (zero-based).
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n3 = self.dims.n3;
        let mut worst = 0.0f64;
        for k in 0..n3 {
            let mirror = (n3 - k) % n3;
            for (a, b) in self.slice(k).iter().zip(self.slice(mirror)) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }
}

/// Slices of a real tensor's spectrum that equal their own conjugate: slice 0,
/// and slice `n3/2` when `n3` is even.
pub(crate) fn self_conjugate_slices(n3: usize) -> impl Iterator<Item = usize> {
    let mid = (n3.is_multiple_of(2) && n3 > 1).then_some(n3 / 2);
    std::iter::once(0).chain(mid)
}

/// Number of leading slices that determine the whole spectrum of a real
/// tensor: `floor(n3/2) + 1`.
pub(crate) fn independent_slices(n3: usize) -> usize {
    n3 / 2 + 1
}

fn plan(n3: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n3)
    } else {
        planner.plan_fft_forward(n3)
    }
}

/// Applies `fft` to every tube, reading from and writing to slice-major
/// storage.
fn transform_tubes(dims: Dims, input: &[Complex64], fft: &Arc<dyn Fft<f64>>) -> Vec<Complex64> {
    let n3 = dims.n3;
    let m = dims.slice_len();
    let mut tubes = vec![Complex64::new(0.0, 0.0); dims.len()];
    tubes
        .par_chunks_mut(n3)
        .enumerate()
        .for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |scratch, (p, tube)| {
                for (k, z) in tube.iter_mut().enumerate() {
                    *z = input[p + m * k];
                }
                fft.process_with_scratch(tube, scratch);
            },
        );
    let mut out = vec![Complex64::new(0.0, 0.0); dims.len()];
    out.par_chunks_mut(m).enumerate().for_each(|(k, slice)| {
        for (p, z) in slice.iter_mut().enumerate() {
            *z = tubes[p * n3 + k];
        }
    });
    out
}

/// Unnormalized forward DFT of every tube `x(i, j, :)`.
pub fn dft_mode3(x: &Tensor3) -> SpectralTensor3 {
    let dims = x.dims();
    let input: Vec<Complex64> = x.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let data = transform_tubes(dims, &input, &plan(dims.n3, false));
    let mut out = SpectralTensor3 {
        dims,
        data,
        from_real: true,
    };
    out.enforce_conjugate_symmetry();
    out
}

/// Inverse of [`dft_mode3`] (with the `1/n3` factor). Fails with
/// [`Error::ImaginaryResidueTooLarge`] when the result is not real to within
/// [`IMAG_RESIDUE_TOL`] of its Frobenius norm.
pub fn idft_mode3(x: &SpectralTensor3) -> Result<Tensor3> {
    let dims = x.dims();
    let raw = transform_tubes(dims, &x.data, &plan(dims.n3, true));
    let scale = 1.0 / dims.n3 as f64;
    let mut imag_sq = 0.0;
    let mut total_sq = 0.0;
    let mut data = Vec::with_capacity(dims.len());
    for z in raw {
        let z = z * scale;
        imag_sq += z.im * z.im;
        total_sq += z.norm_sqr();
        data.push(z.re);
    }
    let (residue, norm) = (imag_sq.sqrt(), total_sq.sqrt());
    if residue > IMAG_RESIDUE_TOL * norm {
        return Err(Error::ImaginaryResidueTooLarge { residue, norm });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteOutput("idft_mode3"));
    }
    Ok(Tensor3::from_parts(dims, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;

    // Direct O(n3^2) DFT summation, one tube at a time.
    fn naive_dft(x: &Tensor3) -> Vec<Complex64> {
        let Dims { n1, n2, n3 } = x.dims();
        let mut out = vec![Complex64::new(0.0, 0.0); x.dims().len()];
        for j in 0..n2 {
            for i in 0..n1 {
                for f in 0..n3 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for t in 0..n3 {
                        let ang = -2.0 * std::f64::consts::PI * (f * t) as f64 / n3 as f64;
                        acc += Complex64::from_polar(x[(i, j, t)], ang);
                    }
                    out[x.dims().offset(i, j, f)] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn constant_tube_goes_to_dc() {
        let x = Tensor3::from_vec(1, 1, 5, vec![2.5; 5]).unwrap();
        let s = dft_mode3(&x);
        assert!((s.get(0, 0, 0) - Complex64::new(12.5, 0.0)).norm() < 1e-12);
        for k in 1..5 {
            assert!(s.get(0, 0, k).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip() {
        let x = random_tensor(4, 3, 5, 7);
        let back = idft_mode3(&dft_mode3(&x)).unwrap();
        assert!(back.distance(&x).unwrap() < 1e-12);
    }

    #[test]
    fn matches_naive_summation_and_is_conjugate_symmetric() {
        for (n3, seed) in [(4, 1), (5, 2), (1, 3), (2, 4)] {
            let x = random_tensor(3, 3, n3, seed);
            let fast = dft_mode3(&x);
            let slow = naive_dft(&x);
            for (a, b) in fast.as_slice().iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12, "n3={n3}: {a} vs {b}");
            }
            assert_eq!(fast.conjugate_symmetry_defect(), 0.0);
            for k in self_conjugate_slices(n3) {
                assert!(fast.slice(k).iter().all(|z| z.im == 0.0));
            }
        }
    }

    #[test]
    fn complex_spectrum_is_rejected_on_inverse() {
        let dims = Dims::new(1, 1, 4).unwrap();
        let mut s = SpectralTensor3::zeros(dims);
        s.slice_mut(1)[0] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            idft_mode3(&s),
            Err(Error::ImaginaryResidueTooLarge { .. })
        ));
    }
}
