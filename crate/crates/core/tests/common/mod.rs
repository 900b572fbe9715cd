//! Reference implementations used to check the library from the outside.
//!
//! Everything here is written directly from the definitions, with naive loops
//! and no FFT, so it shares no code path with the crate under test.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tubal::Tensor3;

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(n1: usize, n2: usize, n3: usize, rng: &mut impl Rng) -> Tensor3 {
    Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.sample(StandardNormal)).unwrap()
}

pub fn uniform(n1: usize, n2: usize, n3: usize, rng: &mut impl Rng) -> Tensor3 {
    Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.random::<f64>()).unwrap()
}

pub fn rel_diff(a: &Tensor3, b: &Tensor3) -> f64 {
    a.distance(b).unwrap() / b.frob_norm().max(f64::MIN_POSITIVE)
}

/// `C(:,:,k) = Σ_l A(:,:,l) B(:,:,(k − l) mod n3)`.
pub fn circular_t_product(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let (n1, p, n3) = a.shape();
    let (_, n2, _) = b.shape();
    let mut c = Tensor3::zeros(n1, n2, n3).unwrap();
    for k in 0..n3 {
        for l in 0..n3 {
            let m = (k + n3 - l) % n3;
            for i in 0..n1 {
                for j in 0..n2 {
                    let mut s = 0.0;
                    for t in 0..p {
                        s += a[(i, t, l)] * b[(t, j, m)];
                    }
                    c[(i, j, k)] += s;
                }
            }
        }
    }
    c
}

/// Frontal slices of the unnormalized DFT along mode 3, by direct summation.
pub fn fourier_slices(x: &Tensor3) -> Vec<DMatrix<C64>> {
    let (n1, n2, n3) = x.shape();
    (0..n3)
        .map(|k| {
            DMatrix::from_fn(n1, n2, |i, j| {
                (0..n3)
                    .map(|t| {
                        let angle = -2.0 * std::f64::consts::PI * (k * t) as f64 / n3 as f64;
                        C64::from_polar(x[(i, j, t)], angle)
                    })
                    .sum()
            })
        })
        .collect()
}

pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    m.clone().singular_values().iter().copied().collect()
}

pub fn nuclear_norm(m: &DMatrix<C64>) -> f64 {
    singular_values(m).iter().sum()
}

/// Sum of nuclear norms of all Fourier slices.
pub fn tnn_by_slices(x: &Tensor3) -> f64 {
    fourier_slices(x).iter().map(nuclear_norm).sum()
}

/// Matrix singular value thresholding `U max(Σ − tau, 0) V^H`.
pub fn matrix_svt(m: &DMatrix<C64>, tau: f64) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let shrunk = DMatrix::from_diagonal(
        &svd.singular_values.map(|s| C64::new((s - tau).max(0.0), 0.0)),
    );
    u * shrunk * v_t
}

/// `TNN(y) + β/2 ‖y − x‖²`.
pub fn prox_objective(y: &Tensor3, x: &Tensor3, beta: f64) -> f64 {
    let d = y.distance(x).unwrap();
    tnn_by_slices(y) + 0.5 * beta * d * d
}

/// SSIM of two column-major `n1 x n2` images by direct 2D windowed sums over
/// an explicitly mirrored copy.
pub fn ssim_direct(a: &[f64], b: &[f64], n1: usize, n2: usize) -> f64 {
    const W: usize = 11;
    const R: isize = 5;
    let mut win = [[0.0; W]; W];
    let mut total = 0.0;
    for (u, row) in win.iter_mut().enumerate() {
        for (v, w) in row.iter_mut().enumerate() {
            let (du, dv) = (u as f64 - 5.0, v as f64 - 5.0);
            *w = (-(du * du + dv * dv) / (2.0 * 1.5 * 1.5)).exp();
            total += *w;
        }
    }
    for row in win.iter_mut() {
        for w in row.iter_mut() {
            *w /= total;
        }
    }
    let mirror = |i: isize, n: usize| -> usize {
        let n = n as isize;
        let period = 2 * n;
        let r = i.rem_euclid(period);
        (if r < n { r } else { period - 1 - r }) as usize
    };
    let pa = |i: isize, j: isize| a[mirror(i, n1) + n1 * mirror(j, n2)];
    let pb = |i: isize, j: isize| b[mirror(i, n1) + n1 * mirror(j, n2)];
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut acc = 0.0;
    for j in 0..n2 as isize {
        for i in 0..n1 as isize {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (u, row) in win.iter().enumerate() {
                for (v, &w) in row.iter().enumerate() {
                    let (x, y) = (pa(i + u as isize - R, j + v as isize - R), pb(i + u as isize - R, j + v as isize - R));
                    ma += w * x;
                    mb += w * y;
                    saa += w * x * x;
                    sbb += w * y * y;
                    sab += w * x * y;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            acc += (2.0 * ma * mb + c1) * (2.0 * cov + c2)
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    acc / (n1 * n2) as f64
}
