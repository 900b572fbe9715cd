//! Observation patterns: element-wise, tubal, Bayer, and mask images.
//!
//! Random patterns are drawn from ChaCha8 seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`, a counter-based stream cipher generator
//! with identical output on every platform. Exactly `round(rate * N)` indices
//! are chosen without replacement (`rand::seq::index::sample`), so the number
//! of observed entries never fluctuates.

use std::path::PathBuf;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::load_binary_mask;
use crate::prox::SupportMask;
use crate::tensor::Dims;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingKind {
    /// Entries sampled independently in every slice.
    Elementwise,
    /// Spatial positions sampled, each observed across all slices.
    Tubal,
    /// 2x2 color filter array: G at (0,0) and (1,1), R at (0,1), B at (1,0).
    Bayer,
    /// Observed wherever a binary image is nonzero.
    MaskImage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingSpec {
    pub kind: SamplingKind,
    /// Required for element-wise and tubal sampling.
    pub rate: Option<f64>,
    pub seed: u64,
    /// Required for [`SamplingKind::MaskImage`].
    pub mask_path: Option<PathBuf>,
}

impl SamplingSpec {
    pub fn elementwise(rate: f64, seed: u64) -> Self {
        Self {
            kind: SamplingKind::Elementwise,
            rate: Some(rate),
            seed,
            mask_path: None,
        }
    }

    pub fn tubal(rate: f64, seed: u64) -> Self {
        Self {
            kind: SamplingKind::Tubal,
            ..Self::elementwise(rate, seed)
        }
    }

    pub fn bayer() -> Self {
        Self {
            kind: SamplingKind::Bayer,
            rate: None,
            seed: 0,
            mask_path: None,
        }
    }

    pub fn mask_image(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: SamplingKind::MaskImage,
            rate: None,
            seed: 0,
            mask_path: Some(path.into()),
        }
    }

    fn checked_rate(&self) -> Result<f64> {
        let rate = self
            .rate
            .ok_or_else(|| Error::InvalidParameter("sampling rate is required".into()))?;
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::RateOutOfRange(rate));
        }
        Ok(rate)
    }
}

fn exact_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64).round() as usize).min(n)
}

/// Draws the mask described by `spec` for a tensor of shape `dims`.
pub fn gen_mask(spec: &SamplingSpec, dims: Dims) -> Result<SupportMask> {
    let Dims { n1, n2, n3 } = dims;
    match spec.kind {
        SamplingKind::Elementwise => {
            let rate = spec.checked_rate()?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut flags = vec![false; dims.len()];
            for i in sample(&mut rng, dims.len(), exact_count(rate, dims.len())) {
                flags[i] = true;
            }
            SupportMask::from_vec(n1, n2, n3, flags)
        }
        SamplingKind::Tubal => {
            let rate = spec.checked_rate()?;
            let m = dims.slice_len();
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut spatial = vec![false; m];
            for i in sample(&mut rng, m, exact_count(rate, m)) {
                spatial[i] = true;
            }
            SupportMask::from_vec(n1, n2, n3, spatial.repeat(n3))
        }
        SamplingKind::Bayer => {
            if n3 != 3 || n1 % 2 != 0 || n2 % 2 != 0 {
                return Err(Error::BayerDimsInvalid(dims.as_tuple()));
            }
            let mut mask = SupportMask::filled(dims, false);
            for j in 0..n2 {
                for i in 0..n1 {
                    let channel = match (i % 2, j % 2) {
                        (0, 0) | (1, 1) => 1,
                        (0, 1) => 0,
                        _ => 2,
                    };
                    mask.set(i, j, channel, true);
                }
            }
            Ok(mask)
        }
        SamplingKind::MaskImage => {
            let path = spec
                .mask_path
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("mask image path is required".into()))?;
            let (w_n1, w_n2, spatial) = load_binary_mask(path)?;
            if (w_n1, w_n2) != (n1, n2) {
                return Err(Error::InconsistentDims(format!(
                    "mask image is {w_n1}x{w_n2}, tensor is {dims}"
                )));
            }
            SupportMask::from_vec(n1, n2, n3, spatial.repeat(n3))
        }
    }
}
