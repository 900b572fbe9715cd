//! ADMM for TNN-regularized completion with a plug-and-play denoiser.
//!
//! The model is
//!
//! ```text
//! min_X  ||X||_TNN + lambda * Phi(X)   s.t.  P_Ω(X) = P_Ω(O)
//! ```
//!
//! split as `Y = X` (handled by thresholding) and `Z = X` (handled by the
//! denoiser). Starting from `X = Y = Z = P_Ω(O)` and zero multipliers, one
//! iteration is
//!
//! ```text
//! Y  <- svt_tnn(X + Λ1/β, 1/β)
//! Z  <- denoise(X + Λ2/β, σ)           σ = sqrt(λ/β) unless overridden
//! X  <- O on Ω,  (βY + βZ − Λ1 − Λ2) / (2β) elsewhere
//! Λ1 <- Λ1 + β(X − Y)
//! Λ2 <- Λ2 + β(X − Z)
//! ```
//!
//! Both `Y` and `Z` read the previous `X`. The loop stops once the relative
//! change `||X⁺ − X|| / ||X||` drops below `tol`, or after `max_iter`
//! iterations. A step that leaves `X` exactly in place while `X ≠ Y` does not
//! count as convergence when some entries are unobserved: with a large
//! threshold the first `Y` can be all zeros, and the multipliers need a few
//! steps before `X` moves. `β` and `σ` stay fixed for the whole run.

use std::io::{self, Write};
use std::time::Instant;

use crate::denoise::{Denoise, Denoiser, DenoiserSpec};
use crate::error::{Error, Result};
use crate::prox::{svt_with_norm, SupportMask};
use crate::tensor::Tensor3;

/// Parameter candidates used when tuning `β` and `λ`.
pub const PARAMETER_GRID: [f64; 7] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2];

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Penalty parameter β.
    pub beta: f64,
    /// Weight λ of the denoiser-backed regularizer.
    pub lambda: f64,
    /// Denoiser noise level; defaults to `sqrt(λ/β)`.
    pub sigma_override: Option<f64>,
    /// Relative-change tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub denoiser: DenoiserSpec,
    /// Clamp the returned tensor to `[0, 1]`.
    pub clip_output: bool,
    /// Record every `trace_every`-th iteration (the last one is always kept).
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            lambda: 0.0,
            sigma_override: None,
            tol: 1e-4,
            max_iter: 500,
            denoiser: DenoiserSpec::identity(),
            clip_output: true,
            trace_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn sigma(&self) -> f64 {
        self.sigma_override
            .unwrap_or_else(|| (self.lambda / self.beta).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return bad(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if self.trace_every == 0 {
            return bad("trace_every must be at least 1".into());
        }
        if let Some(s) = self.sigma_override {
            if !s.is_finite() || s <= 0.0 {
                return bad(format!("sigma must be positive, got {s}"));
            }
        }
        self.denoiser.validate()
    }
}

/// ADMM iterates and multipliers.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Tensor3,
    pub y: Tensor3,
    pub z: Tensor3,
    pub lambda1: Tensor3,
    pub lambda2: Tensor3,
    pub iter: usize,
}

/// Diagnostics of one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub relcha: f64,
    /// TNN of the thresholded iterate `Y`.
    pub tnn: f64,
    /// `||X − Y||_F`.
    pub res_y: f64,
    /// `||X − Z||_F`.
    pub res_z: f64,
    /// Wall time since the solver started.
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    /// Iterations actually run.
    pub iterations: usize,
    /// Whether the run stopped on the tolerance rather than `max_iter`.
    pub converged: bool,
}

pub const TRACE_HEADER: &str = "iter,relcha,tnn,res_y,res_z,seconds";

impl SolverTrace {
    pub fn final_relcha(&self) -> Option<f64> {
        self.records.last().map(|r| r.relcha)
    }

    /// Writes the header line followed by one CSV record per iteration.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{:.6}",
                r.iter, r.relcha, r.tnn, r.res_y, r.res_z, r.seconds
            )?;
        }
        Ok(())
    }
}

/// A completion run in progress. Useful for stepping through iterations; most
/// callers want [`complete`].
pub struct Solver<D> {
    observed: Tensor3,
    mask: SupportMask,
    cfg: SolverConfig,
    sigma: f64,
    denoiser: D,
    state: SolverState,
    has_unobserved: bool,
    started: Instant,
}

impl<D: Denoise> Solver<D> {
    pub fn new(o: &Tensor3, mask: &SupportMask, cfg: &SolverConfig, denoiser: D) -> Result<Self> {
        cfg.validate()?;
        mask.check(o)?;
        if mask.observed_count() == 0 {
            return Err(Error::EmptyMask);
        }
        if !o.is_finite() {
            return Err(Error::NonFiniteOutput("observation"));
        }
        let observed = mask.apply(o)?;
        let zeros = Tensor3::zeros_like_dims(o.dims());
        let state = SolverState {
            x: observed.clone(),
            y: observed.clone(),
            z: observed.clone(),
            lambda1: zeros.clone(),
            lambda2: zeros,
            iter: 0,
        };
        Ok(Self {
            observed,
            mask: mask.clone(),
            cfg: cfg.clone(),
            sigma: cfg.sigma(),
            denoiser,
            state,
            has_unobserved: mask.observed_count() < mask.dims().len(),
            started: Instant::now(),
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    /// Runs one ADMM iteration and reports its diagnostics.
    pub fn step(&mut self) -> Result<TraceRecord> {
        let beta = self.cfg.beta;
        let s = &self.state;

        let y_in = s.x.add_scaled(1.0 / beta, &s.lambda1)?;
        let svt = svt_with_norm(&y_in, 1.0 / beta)?;
        let y = svt.tensor;

        let z_in = s.x.add_scaled(1.0 / beta, &s.lambda2)?;
        let z = self.denoiser.denoise(&z_in, self.sigma)?;

        let mut x = Tensor3::zeros_like_dims(s.x.dims());
        for (idx, out) in x.as_mut_slice().iter_mut().enumerate() {
            *out = if self.mask.as_slice()[idx] {
                self.observed.as_slice()[idx]
            } else {
                (beta * y.as_slice()[idx] + beta * z.as_slice()[idx]
                    - s.lambda1.as_slice()[idx]
                    - s.lambda2.as_slice()[idx])
                    / (2.0 * beta)
            };
        }
        if !x.is_finite() {
            return Err(Error::NonFiniteOutput("X update"));
        }

        let res_y_t = &x - &y;
        let res_z_t = &x - &z;
        let lambda1 = s.lambda1.add_scaled(beta, &res_y_t)?;
        let lambda2 = s.lambda2.add_scaled(beta, &res_z_t)?;

        let change = x.distance(&s.x)?;
        let prev_norm = s.x.frob_norm();
        let relcha = if prev_norm > 0.0 { change / prev_norm } else { change };

        let iter = s.iter + 1;
        self.state = SolverState {
            x,
            y,
            z,
            lambda1,
            lambda2,
            iter,
        };
        Ok(TraceRecord {
            iter,
            relcha,
            tnn: svt.tnn,
            res_y: res_y_t.frob_norm(),
            res_z: res_z_t.frob_norm(),
            seconds: self.started.elapsed().as_secs_f64(),
        })
    }

    /// Iterates until the tolerance or the iteration cap is reached.
    pub fn run(mut self) -> Result<(Tensor3, SolverTrace)> {
        let mut trace = SolverTrace::default();
        loop {
            let rec = self.step()?;
            // A zero change while X and Y still disagree happens when the first
            // thresholds wipe out Y; the multipliers keep moving, so go on.
            let stalled = rec.relcha == 0.0 && rec.res_y > 0.0 && self.has_unobserved;
            let converged = rec.relcha < self.cfg.tol && !stalled;
            let done = converged || rec.iter >= self.cfg.max_iter;
            if done || rec.iter % self.cfg.trace_every == 0 {
                trace.records.push(rec);
            }
            if done {
                trace.iterations = rec.iter;
                trace.converged = converged;
                break;
            }
        }
        let x = self.state.x;
        let out = if self.cfg.clip_output { x.clamp(0.0, 1.0) } else { x };
        Ok((out, trace))
    }
}

/// Completes `o` from the entries marked in `mask`, using the denoiser named
/// in `cfg`.
pub fn complete(o: &Tensor3, mask: &SupportMask, cfg: &SolverConfig) -> Result<(Tensor3, SolverTrace)> {
    let denoiser = Denoiser::from_spec(&cfg.denoiser)?;
    Solver::new(o, mask, cfg, denoiser)?.run()
}

/// Same as [`complete`] with a caller-supplied denoiser; `cfg.denoiser` is
/// ignored.
pub fn complete_with<D: Denoise>(
    o: &Tensor3,
    mask: &SupportMask,
    cfg: &SolverConfig,
    denoiser: D,
) -> Result<(Tensor3, SolverTrace)> {
    Solver::new(o, mask, cfg, denoiser)?.run()
}

/// Plain TNN completion: [`complete`] with the identity denoiser and `λ = 0`.
pub fn solve_tnn_only(
    o: &Tensor3,
    mask: &SupportMask,
    beta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Tensor3, SolverTrace)> {
    let cfg = SolverConfig {
        beta,
        lambda: 0.0,
        tol,
        max_iter,
        ..SolverConfig::default()
    };
    complete(o, mask, &cfg)
}

impl<D: Denoise + ?Sized> Denoise for &mut D {
    fn denoise(&mut self, noisy: &Tensor3, sigma: f64) -> Result<Tensor3> {
        (**self).denoise(noisy, sigma)
    }
}
