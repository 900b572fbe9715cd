//! Isotropic total-variation denoising by projected gradient on the dual.
//!
//! Solves `min_u TV(u) + 1/(2 sigma^2) ||u - v||^2` for an image with one or
//! more channels. The dual variable `p` lives in the pointwise unit ball (the
//! ball couples all channels, giving vectorial TV), and the primal solution is
//! recovered as `u = v - sigma^2 div p`.
//!
//! Gradients are forward differences with a zero difference across the last
//! row and column; `div` is the negative adjoint of that gradient.

/// Channels of one image, each an `n1 x n2` column-major buffer.
pub(crate) struct Planes<'a> {
    pub n1: usize,
    pub n2: usize,
    pub channels: Vec<&'a [f64]>,
}

fn grad(u: &[f64], n1: usize, n2: usize, gx: &mut [f64], gy: &mut [f64]) {
    for j in 0..n2 {
        for i in 0..n1 {
            let o = i + n1 * j;
            gx[o] = if i + 1 < n1 { u[o + 1] - u[o] } else { 0.0 };
            gy[o] = if j + 1 < n2 { u[o + n1] - u[o] } else { 0.0 };
        }
    }
}

fn div(px: &[f64], py: &[f64], n1: usize, n2: usize, out: &mut [f64]) {
    for j in 0..n2 {
        for i in 0..n1 {
            let o = i + n1 * j;
            let dx = match i {
                _ if n1 == 1 => 0.0,
                0 => px[o],
                _ if i + 1 == n1 => -px[o - 1],
                _ => px[o] - px[o - 1],
            };
            let dy = match j {
                _ if n2 == 1 => 0.0,
                0 => py[o],
                _ if j + 1 == n2 => -py[o - n1],
                _ => py[o] - py[o - n1],
            };
            out[o] = dx + dy;
        }
    }
}

/// Runs `iterations` dual projected-gradient steps of size `step` and returns
/// the denoised channels.
pub(crate) fn tv_denoise(planes: &Planes<'_>, sigma: f64, iterations: usize, step: f64) -> Vec<Vec<f64>> {
    let (n1, n2) = (planes.n1, planes.n2);
    let m = n1 * n2;
    let c = planes.channels.len();
    let lambda = sigma * sigma;

    let mut px = vec![vec![0.0; m]; c];
    let mut py = vec![vec![0.0; m]; c];
    let mut d = vec![0.0; m];
    let mut gx = vec![vec![0.0; m]; c];
    let mut gy = vec![vec![0.0; m]; c];

    for _ in 0..iterations {
        for ch in 0..c {
            div(&px[ch], &py[ch], n1, n2, &mut d);
            for (dv, &v) in d.iter_mut().zip(planes.channels[ch]) {
                *dv -= v / lambda;
            }
            grad(&d, n1, n2, &mut gx[ch], &mut gy[ch]);
        }
        for o in 0..m {
            let mut norm_sq = 0.0;
            for ch in 0..c {
                px[ch][o] += step * gx[ch][o];
                py[ch][o] += step * gy[ch][o];
                norm_sq += px[ch][o] * px[ch][o] + py[ch][o] * py[ch][o];
            }
            if norm_sq > 1.0 {
                let inv = 1.0 / norm_sq.sqrt();
                for ch in 0..c {
                    px[ch][o] *= inv;
                    py[ch][o] *= inv;
                }
            }
        }
    }

    (0..c)
        .map(|ch| {
            div(&px[ch], &py[ch], n1, n2, &mut d);
            planes.channels[ch]
                .iter()
                .zip(&d)
                .map(|(&v, &dv)| v - lambda * dv)
                .collect()
        })
        .collect()
}

/// Discrete isotropic TV of a multi-channel image, with the same gradient as
/// the solver.
pub fn total_variation(n1: usize, n2: usize, channels: &[&[f64]]) -> f64 {
    let m = n1 * n2;
    let mut acc = vec![0.0; m];
    let mut gx = vec![0.0; m];
    let mut gy = vec![0.0; m];
    for ch in channels {
        grad(ch, n1, n2, &mut gx, &mut gy);
        for o in 0..m {
            acc[o] += gx[o] * gx[o] + gy[o] * gy[o];
        }
    }
    acc.iter().map(|v| v.sqrt()).sum()
}

/// `TV(u) + 1/(2 sigma^2) ||u - v||^2`, the model the TV denoiser minimizes.
pub fn rof_objective(n1: usize, n2: usize, u: &[&[f64]], v: &[&[f64]], sigma: f64) -> f64 {
    let fid: f64 = u
        .iter()
        .zip(v)
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)))
        .sum();
    total_variation(n1, n2, u) + fid / (2.0 * sigma * sigma)
}
