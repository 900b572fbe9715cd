//! Low-rank tensor completion built on the t-SVD, with a plug-and-play ADMM
//! solver whose regularization step is delegated to a denoiser.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`], [`spectral`], [`algebra`], [`tsvd`]: the t-product algebra,
//!   t-SVD, tubal and multi-rank, and the tensor nuclear norm.
//! - [`prox`]: tensor singular value thresholding and the support projection.
//! - [`denoise`]: the denoiser interface, a total-variation denoiser, and a
//!   client for external denoiser processes.
//! - [`solver`]: the ADMM completion loop.
//! - [`sampling`], [`metrics`], [`io`]: observation masks, PSNR/SSIM, and file
//!   formats.

pub mod algebra;
pub mod denoise;
pub mod error;
pub mod io;
mod linalg;
pub mod metrics;
pub mod prox;
pub mod sampling;
pub mod solver;
pub mod spectral;
pub mod tensor;
pub mod tsvd;

#[cfg(test)]
pub(crate) mod testutil;

pub use algebra::{conj_transpose, identity_tensor, t_product};
pub use error::{Error, Result};
pub use prox::{project_support, svt_tnn, SupportMask};
pub use spectral::{dft_mode3, idft_mode3, SpectralTensor3};
pub use tensor::{Dims, Tensor3};
pub use tsvd::{multi_rank, tnn, tsvd, tubal_rank, TsvdFactors, DEFAULT_RANK_TOL};

// Compiles and runs the code listings of the guide in book/ as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/tnn.md")]
    mod tnn {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/denoisers.md")]
    mod denoisers {}
    #[doc = include_str!("../../../book/src/sampling-metrics.md")]
    mod sampling_metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
