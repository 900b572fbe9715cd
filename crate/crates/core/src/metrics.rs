//! Image quality metrics, averaged over frontal slices.
//!
//! Data is assumed to be scaled to `[0, 1]`, so the PSNR peak is 1.

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// SSIM window side length.
pub const SSIM_WINDOW: usize = 11;
/// Standard deviation of the Gaussian SSIM window.
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Mean PSNR over frontal slices. A slice reproduced exactly has infinite
/// PSNR, and then so does the mean.
pub fn psnr(x: &Tensor3, reference: &Tensor3) -> Result<f64> {
    Ok(psnr_per_slice(x, reference)?.iter().sum::<f64>() / x.dims().n3 as f64)
}

pub fn psnr_per_slice(x: &Tensor3, reference: &Tensor3) -> Result<Vec<f64>> {
    x.check_same_dims(reference)?;
    let n3 = x.dims().n3;
    Ok((0..n3)
        .map(|k| {
            let (a, b) = (x.slice(k), reference.slice(k));
            let mse = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len() as f64;
            if mse == 0.0 {
                f64::INFINITY
            } else {
                10.0 * (1.0 / mse).log10()
            }
        })
        .collect())
}

/// Mean SSIM over frontal slices with an 11x11 Gaussian window (std 1.5) and
/// symmetric boundary extension.
pub fn ssim(x: &Tensor3, reference: &Tensor3) -> Result<f64> {
    Ok(ssim_per_slice(x, reference)?.iter().sum::<f64>() / x.dims().n3 as f64)
}

pub fn ssim_per_slice(x: &Tensor3, reference: &Tensor3) -> Result<Vec<f64>> {
    x.check_same_dims(reference)?;
    let d = x.dims();
    if d.n1.min(d.n2) < SSIM_WINDOW {
        return Err(Error::SliceTooSmall { n1: d.n1, n2: d.n2 });
    }
    let kernel = gaussian_kernel();
    Ok((0..d.n3)
        .map(|k| slice_ssim(x.slice(k), reference.slice(k), d.n1, d.n2, &kernel))
        .collect())
}

/// `||x − ref||_F / ||ref||_F`.
pub fn rel_error(x: &Tensor3, reference: &Tensor3) -> Result<f64> {
    let norm = reference.frob_norm();
    if norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(x.distance(reference)? / norm)
}

fn gaussian_kernel() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let t = i as f64 - r;
            (-t * t / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    j as usize
}

/// Separable "same"-size filtering of a column-major `n1 x n2` image.
fn filter(img: &[f64], n1: usize, n2: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; img.len()];
    for j in 0..n2 {
        for i in 0..n1 {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let ii = reflect(i as isize + t as isize - r, n1);
                acc += w * img[ii + n1 * j];
            }
            tmp[i + n1 * j] = acc;
        }
    }
    let mut out = vec![0.0; img.len()];
    for j in 0..n2 {
        for i in 0..n1 {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let jj = reflect(j as isize + t as isize - r, n2);
                acc += w * tmp[i + n1 * jj];
            }
            out[i + n1 * j] = acc;
        }
    }
    out
}

fn slice_ssim(a: &[f64], b: &[f64], n1: usize, n2: usize, kernel: &[f64]) -> f64 {
    let prod = |f: fn(f64, f64) -> f64| a.iter().zip(b).map(|(&p, &q)| f(p, q)).collect::<Vec<_>>();
    let mu_a = filter(a, n1, n2, kernel);
    let mu_b = filter(b, n1, n2, kernel);
    let aa = filter(&prod(|p, _| p * p), n1, n2, kernel);
    let bb = filter(&prod(|_, q| q * q), n1, n2, kernel);
    let ab = filter(&prod(|p, q| p * q), n1, n2, kernel);
    let mut total = 0.0;
    for o in 0..a.len() {
        let (ma, mb) = (mu_a[o], mu_b[o]);
        let va = aa[o] - ma * ma;
        let vb = bb[o] - mb * mb;
        let cov = ab[o] - ma * mb;
        total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    total / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;

    #[test]
    fn psnr_cases() {
        let ones = Tensor3::from_fn(3, 4, 2, |_, _, _| 1.0).unwrap();
        let zeros = Tensor3::zeros(3, 4, 2).unwrap();
        assert_eq!(psnr(&zeros, &ones).unwrap(), 0.0);
        assert_eq!(psnr(&ones, &ones).unwrap(), f64::INFINITY);
        let half = ones.scale(0.5);
        // MSE 0.25 -> 10 log10(4)
        assert!((psnr(&half, &ones).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn psnr_is_symmetric() {
        let a = random_tensor(5, 5, 3, 1).map(|v| 0.5 + 0.1 * v);
        let b = random_tensor(5, 5, 3, 2).map(|v| 0.5 + 0.1 * v);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = random_tensor(16, 12, 2, 3).map(|v| (0.5 + 0.2 * v).clamp(0.0, 1.0));
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ssim_two_constants() {
        let a = Tensor3::from_fn(12, 12, 1, |_, _, _| 0.2).unwrap();
        let b = Tensor3::from_fn(12, 12, 1, |_, _, _| 0.7).unwrap();
        let want = (2.0 * 0.2 * 0.7 + SSIM_C1) / (0.04 + 0.49 + SSIM_C1);
        let got = ssim(&a, &b).unwrap();
        assert!(got < 1.0);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn ssim_small_slice() {
        let a = Tensor3::zeros(10, 20, 1).unwrap();
        assert!(matches!(ssim(&a, &a), Err(Error::SliceTooSmall { .. })));
    }

    #[test]
    fn rel_error_cases() {
        let r = random_tensor(3, 3, 3, 4);
        assert_eq!(rel_error(&r, &r).unwrap(), 0.0);
        assert!((rel_error(&r.scale(2.0), &r).unwrap() - 1.0).abs() < 1e-15);
        let z = Tensor3::zeros(3, 3, 3).unwrap();
        assert!((rel_error(&z, &r).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(rel_error(&r, &z), Err(Error::ZeroReference)));
    }

    #[test]
    fn dimension_checks() {
        let a = Tensor3::zeros(12, 12, 1).unwrap();
        let b = Tensor3::zeros(12, 12, 2).unwrap();
        assert!(matches!(psnr(&a, &b), Err(Error::DimensionMismatch(_))));
        assert!(matches!(ssim(&a, &b), Err(Error::DimensionMismatch(_))));
    }
}
