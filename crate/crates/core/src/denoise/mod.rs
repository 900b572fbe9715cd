//! Denoisers standing in for the proximal step of the implicit regularizer.
//!
//! In the ADMM loop the regularizer only appears through
//! `argmin_z Phi(z) + 1/(2 sigma^2) ||z - v||^2`, so any map from a noisy
//! tensor and a noise level to a cleaner tensor can be plugged in. Built-in
//! choices are the identity (which turns the solver into plain TNN
//! completion) and total variation; anything else can run as an external
//! process speaking the [`protocol`].

mod external;
pub mod protocol;
mod tv;

use rayon::prelude::*;

pub use external::DenoiserSession;
pub use tv::{rof_objective, total_variation};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Largest stable step of the dual TV iteration.
pub const MAX_TV_STEP: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenoiserKind {
    Identity,
    Tv,
    External,
}

/// How a multi-slice tensor is handed to the denoiser.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelMode {
    /// Every frontal slice is an independent grayscale image.
    PerSlice,
    /// A three-slice tensor is one color image.
    JointRgb,
}

impl ChannelMode {
    /// `JointRgb` for three slices, `PerSlice` otherwise.
    pub fn default_for(n3: usize) -> Self {
        if n3 == 3 {
            ChannelMode::JointRgb
        } else {
            ChannelMode::PerSlice
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    pub tv_iterations: usize,
    pub tv_step: f64,
    /// Program and arguments; only used by [`DenoiserKind::External`].
    pub external_command: Vec<String>,
    /// `None` picks [`ChannelMode::default_for`] the input depth.
    pub channel_mode: Option<ChannelMode>,
}

impl Default for DenoiserSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl DenoiserSpec {
    pub fn identity() -> Self {
        Self {
            kind: DenoiserKind::Identity,
            tv_iterations: 30,
            tv_step: MAX_TV_STEP,
            external_command: Vec::new(),
            channel_mode: None,
        }
    }

    pub fn tv() -> Self {
        Self {
            kind: DenoiserKind::Tv,
            ..Self::identity()
        }
    }

    pub fn external<S: Into<String>>(command: impl IntoIterator<Item = S>) -> Self {
        Self {
            kind: DenoiserKind::External,
            external_command: command.into_iter().map(Into::into).collect(),
            ..Self::identity()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tv_step > 0.0 && self.tv_step <= MAX_TV_STEP) {
            return Err(Error::InvalidParameter(format!(
                "tv_step must lie in (0, {MAX_TV_STEP}], got {}",
                self.tv_step
            )));
        }
        let external = self.kind == DenoiserKind::External;
        if external == self.external_command.is_empty() {
            return Err(Error::InvalidParameter(
                "an external command is required for, and only for, the external denoiser".into(),
            ));
        }
        Ok(())
    }
}

/// A denoiser the solver can call repeatedly.
pub trait Denoise {
    fn denoise(&mut self, noisy: &Tensor3, sigma: f64) -> Result<Tensor3>;
}

/// The runtime form of a [`DenoiserSpec`]; external kinds own a live session.
#[derive(Debug)]
pub enum Denoiser {
    Identity,
    Tv {
        iterations: usize,
        step: f64,
        channel_mode: Option<ChannelMode>,
    },
    External(DenoiserSession),
}

impl Denoiser {
    /// Validates the spec and, for external denoisers, spawns the child.
    pub fn from_spec(spec: &DenoiserSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            DenoiserKind::Identity => Denoiser::Identity,
            DenoiserKind::Tv => Denoiser::Tv {
                iterations: spec.tv_iterations,
                step: spec.tv_step,
                channel_mode: spec.channel_mode,
            },
            DenoiserKind::External => {
                Denoiser::External(DenoiserSession::spawn(&spec.external_command)?)
            }
        })
    }
}

impl Denoise for Denoiser {
    fn denoise(&mut self, noisy: &Tensor3, sigma: f64) -> Result<Tensor3> {
        // The identity ignores sigma, which lets the solver run with lambda = 0.
        let ok = match self {
            Denoiser::Identity => sigma >= 0.0,
            _ => sigma > 0.0,
        };
        if !ok || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "denoiser noise level must be positive, got {sigma}"
            )));
        }
        let out = match self {
            Denoiser::Identity => noisy.clone(),
            Denoiser::Tv {
                iterations,
                step,
                channel_mode,
            } => {
                let mode = channel_mode.unwrap_or(ChannelMode::default_for(noisy.dims().n3));
                tv_tensor(noisy, sigma, *iterations, *step, mode)
            }
            Denoiser::External(session) => session.denoise(noisy, sigma)?,
        };
        if out.dims() != noisy.dims() {
            return Err(Error::ExternalDenoiserFailure(format!(
                "denoiser changed dims from {} to {}",
                noisy.dims(),
                out.dims()
            )));
        }
        if !out.is_finite() {
            return Err(Error::NonFiniteOutput("denoiser"));
        }
        Ok(out)
    }
}

/// One-shot denoising. External denoisers are spawned for this call only; use
/// [`Denoiser::from_spec`] to keep a session across calls.
pub fn denoise(spec: &DenoiserSpec, noisy: &Tensor3, sigma: f64) -> Result<Tensor3> {
    Denoiser::from_spec(spec)?.denoise(noisy, sigma)
}

fn tv_tensor(x: &Tensor3, sigma: f64, iterations: usize, step: f64, mode: ChannelMode) -> Tensor3 {
    let dims = x.dims();
    let mut out = x.clone();
    if mode == ChannelMode::JointRgb && dims.n3 == 3 {
        let planes = tv::Planes {
            n1: dims.n1,
            n2: dims.n2,
            channels: (0..3).map(|k| x.slice(k)).collect(),
        };
        for (k, ch) in tv::tv_denoise(&planes, sigma, iterations, step).into_iter().enumerate() {
            out.slice_mut(k).copy_from_slice(&ch);
        }
    } else {
        let slices: Vec<Vec<f64>> = (0..dims.n3)
            .into_par_iter()
            .map(|k| {
                let planes = tv::Planes {
                    n1: dims.n1,
                    n2: dims.n2,
                    channels: vec![x.slice(k)],
                };
                tv::tv_denoise(&planes, sigma, iterations, step).remove(0)
            })
            .collect();
        for (k, s) in slices.iter().enumerate() {
            out.slice_mut(k).copy_from_slice(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_tensor, rng};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identity_is_bit_exact() {
        let x = random_tensor(4, 5, 3, 1);
        assert_eq!(denoise(&DenoiserSpec::identity(), &x, 0.1).unwrap(), x);
    }

    #[test]
    fn tv_keeps_constant_slices() {
        let x = Tensor3::from_fn(6, 7, 2, |_, _, k| 0.2 + 0.5 * k as f64).unwrap();
        assert_eq!(denoise(&DenoiserSpec::tv(), &x, 0.3).unwrap(), x);
    }

    fn step_edge(seed: u64) -> Tensor3 {
        let mut r = rng(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        Tensor3::from_fn(16, 16, 1, |_, j, _| {
            let clean = if j < 8 { 0.2 } else { 0.8 };
            clean + noise.sample(&mut r)
        })
        .unwrap()
    }

    #[test]
    fn tv_objective_descent_certificate() {
        let v = step_edge(3);
        let sigma = 0.1;
        let u = denoise(&DenoiserSpec::tv(), &v, sigma).unwrap();
        let f = |t: &Tensor3| rof_objective(16, 16, &[t.as_slice()], &[v.as_slice()], sigma);
        let at_u = f(&u);
        assert!(at_u < f(&v));
        let mut r = rng(4);
        for _ in 0..50 {
            let pert = u.map(|x| x + 1e-3 * (r.random::<f64>() * 2.0 - 1.0));
            assert!(at_u < f(&pert));
        }
    }

    #[test]
    fn joint_rgb_matches_per_slice_on_gray_input() {
        // Three identical channels: vectorial TV is sqrt(3) times scalar TV, so
        // joint denoising at sigma equals per-slice denoising at sigma / 3^(1/4).
        let g = step_edge(5);
        let x = Tensor3::from_fn(16, 16, 3, |i, j, _| g[(i, j, 0)]).unwrap();
        let mut joint = DenoiserSpec::tv();
        joint.channel_mode = Some(ChannelMode::JointRgb);
        joint.tv_iterations = 200;
        let out = denoise(&joint, &x, 0.1).unwrap();
        for k in 1..3 {
            assert_eq!(out.slice(k), out.slice(0));
        }
        let mut single = joint.clone();
        single.channel_mode = Some(ChannelMode::PerSlice);
        let alt = denoise(&single, &g, 0.1 / 3f64.powf(0.25)).unwrap();
        let diff = alt
            .as_slice()
            .iter()
            .zip(out.slice(0))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-3, "{diff}");
    }

    #[test]
    fn spec_validation() {
        let mut s = DenoiserSpec::tv();
        s.tv_step = 0.3;
        assert!(s.validate().is_err());
        s.tv_step = 0.0;
        assert!(s.validate().is_err());
        let mut e = DenoiserSpec::external(Vec::<String>::new());
        assert!(e.validate().is_err());
        e.external_command = vec!["cat".into()];
        assert!(e.validate().is_ok());
        let mut i = DenoiserSpec::identity();
        i.external_command = vec!["cat".into()];
        assert!(i.validate().is_err());
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let x = random_tensor(2, 2, 1, 1);
        assert!(denoise(&DenoiserSpec::tv(), &x, 0.0).is_err());
        assert!(denoise(&DenoiserSpec::identity(), &x, -1.0).is_err());
        assert!(denoise(&DenoiserSpec::identity(), &x, 0.0).is_ok());
    }
}
