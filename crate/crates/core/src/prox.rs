//! Proximal operators used by the ADMM iteration.
//!
//! [`svt_tnn`] shrinks every Fourier-domain singular value by `tau`. Note the
//! scaling: with the unnormalized DFT, the TNN adds up `n3` slice nuclear
//! norms, and the exact minimizer of `tnn(y) + (beta/2) ||x - y||_F^2` is
//! `svt_tnn(x, n3 / beta)`. The solver calls `svt_tnn(x, 1 / beta)` instead,
//! which is the exact proximal map of `tnn / n3`; the constant factor is
//! folded into the choice of `beta`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{slice_to_matrix, thin_svd, CMatrix};
use crate::spectral::{
    dft_mode3, idft_mode3, independent_slices, self_conjugate_slices, SpectralTensor3,
};
use crate::tensor::{Dims, Tensor3};

/// The observed index set Ω: `true` marks an observed entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportMask {
    dims: Dims,
    flags: Vec<bool>,
}

impl SupportMask {
    pub fn from_vec(n1: usize, n2: usize, n3: usize, flags: Vec<bool>) -> Result<Self> {
        let dims = Dims::new(n1, n2, n3)?;
        if flags.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} flags supplied for a {} mask",
                flags.len(),
                dims
            )));
        }
        Ok(Self { dims, flags })
    }

    /// A mask with every entry set to `observed`.
    pub fn filled(dims: Dims, observed: bool) -> Self {
        Self {
            dims,
            flags: vec![observed; dims.len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.flags
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.flags[self.dims.offset(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, observed: bool) {
        let o = self.dims.offset(i, j, k);
        self.flags[o] = observed;
    }

    pub fn observed_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Fraction of observed entries.
    pub fn sampling_rate(&self) -> f64 {
        self.observed_count() as f64 / self.dims.len() as f64
    }

    /// `P_Ω(x)`: keeps observed entries of `x`, zeros the rest.
    pub fn apply(&self, x: &Tensor3) -> Result<Tensor3> {
        self.check(x)?;
        let data = x
            .as_slice()
            .iter()
            .zip(&self.flags)
            .map(|(&v, &f)| if f { v } else { 0.0 })
            .collect();
        Ok(Tensor3::from_parts(self.dims, data))
    }

    pub(crate) fn check(&self, x: &Tensor3) -> Result<()> {
        if x.dims() != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "mask {} vs tensor {}",
                self.dims,
                x.dims()
            )));
        }
        Ok(())
    }
}

/// Data-consistency overwrite: `o` on observed entries, `x` elsewhere.
pub fn project_support(x: &Tensor3, o: &Tensor3, mask: &SupportMask) -> Result<Tensor3> {
    mask.check(x)?;
    mask.check(o)?;
    let data = x
        .as_slice()
        .iter()
        .zip(o.as_slice())
        .zip(mask.as_slice())
        .map(|((&xv, &ov), &f)| if f { ov } else { xv })
        .collect();
    Ok(Tensor3::from_parts(x.dims(), data))
}

/// Result of a thresholding step together with the TNN of its output, which
/// falls out of the shrunken singular values for free.
pub(crate) struct SvtOutput {
    pub tensor: Tensor3,
    pub tnn: f64,
}

/// Tensor singular value thresholding with threshold `tau`.
pub fn svt_tnn(x: &Tensor3, tau: f64) -> Result<Tensor3> {
    Ok(svt_with_norm(x, tau)?.tensor)
}

pub(crate) fn svt_with_norm(x: &Tensor3, tau: f64) -> Result<SvtOutput> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be finite and nonnegative, got {tau}"
        )));
    }
    let Dims { n1, n2, n3 } = x.dims();
    let fx = dft_mode3(x);
    let half: Vec<(CMatrix, f64)> = (0..independent_slices(n3))
        .into_par_iter()
        .map(|k| {
            let real = self_conjugate_slices(n3).any(|s| s == k);
            let m = slice_to_matrix(n1, n2, fx.slice(k));
            let svd = thin_svd(&m, real, k)?;
            // Singular values come sorted, so the survivors are a prefix.
            let keep = svd.s.iter().take_while(|&&s| s > tau).count();
            let mut shrunk = svd.u.columns(0, keep).into_owned();
            let mut norm = 0.0;
            for (c, &s) in svd.s[..keep].iter().enumerate() {
                let d = s - tau;
                norm += d;
                shrunk.column_mut(c).scale_mut(d);
            }
            Ok((shrunk * svd.v.columns(0, keep).adjoint(), norm))
        })
        .collect::<Result<_>>()?;

    let mut fy = SpectralTensor3::zeros(x.dims());
    let mut tnn = 0.0;
    for (k, (m, norm)) in half.iter().enumerate() {
        fy.slice_mut(k).copy_from_slice(m.as_slice());
        // Slices other than the self-conjugate ones appear twice.
        let mult = if self_conjugate_slices(n3).any(|s| s == k) { 1.0 } else { 2.0 };
        tnn += mult * norm;
    }
    fy.enforce_conjugate_symmetry();
    let tensor = idft_mode3(&fy)?;
    if !tensor.is_finite() {
        return Err(Error::NonFiniteOutput("svt_tnn"));
    }
    Ok(SvtOutput { tensor, tnn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;
    use crate::tsvd::tnn;

    #[test]
    fn zero_threshold_is_identity() {
        let x = random_tensor(5, 4, 3, 1);
        let y = svt_tnn(&x, 0.0).unwrap();
        assert!(y.distance(&x).unwrap() < 1e-10 * x.frob_norm());
    }

    #[test]
    fn large_threshold_gives_zero() {
        let x = random_tensor(5, 4, 3, 2);
        let y = svt_tnn(&x, 1e6).unwrap();
        assert_eq!(y.max_abs(), 0.0);
    }

    #[test]
    fn reported_norm_matches_tnn() {
        let x = random_tensor(5, 4, 4, 3);
        let out = svt_with_norm(&x, 0.5).unwrap();
        let direct = tnn(&out.tensor).unwrap();
        assert!((out.tnn - direct).abs() < 1e-9 * direct.max(1.0));
    }

    #[test]
    fn negative_threshold_rejected() {
        let x = random_tensor(2, 2, 2, 4);
        assert!(matches!(svt_tnn(&x, -1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn projection_cases() {
        let x = random_tensor(3, 3, 2, 5);
        let o = random_tensor(3, 3, 2, 6);
        let all = SupportMask::filled(x.dims(), true);
        assert_eq!(project_support(&x, &o, &all).unwrap(), o);

        let mut one = SupportMask::filled(x.dims(), false);
        one.set(1, 2, 1, true);
        let p = project_support(&x, &o, &one).unwrap();
        let changed = p
            .as_slice()
            .iter()
            .zip(x.as_slice())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 1);
        assert_eq!(p[(1, 2, 1)], o[(1, 2, 1)]);
        assert_eq!(project_support(&p, &o, &one).unwrap(), p);
    }

    #[test]
    fn projection_dimension_mismatch() {
        let x = random_tensor(3, 3, 2, 5);
        let o = random_tensor(3, 2, 2, 6);
        let m = SupportMask::filled(x.dims(), true);
        assert!(matches!(
            project_support(&x, &o, &m),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
