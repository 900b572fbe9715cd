//! `tubal`: command-line front end for tensor completion experiments.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tubal::denoise::DenoiserSpec;
use tubal::io::{load_image_stack, load_mask, load_tensor, save_image_stack, save_mask, save_tensor};
use tubal::metrics::{psnr, psnr_per_slice, rel_error, ssim, ssim_per_slice};
use tubal::sampling::{gen_mask, SamplingKind, SamplingSpec};
use tubal::solver::{complete, SolverConfig, PARAMETER_GRID};
use tubal::{multi_rank, t_product, tubal_rank, Dims, Tensor3, DEFAULT_RANK_TOL};

#[derive(Parser)]
#[command(name = "tubal", version, about = "Low-rank tensor completion with plug-and-play denoisers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random tensor of given tubal rank as A * B (values in [0, 1]).
    Synth {
        #[arg(long, value_parser = parse_dims)]
        dims: Dims,
        #[arg(long)]
        tubal_rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate an observation mask.
    Mask {
        #[arg(long, value_enum)]
        kind: MaskKind,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_dims)]
        dims: Dims,
        /// Binary image for `--kind image`.
        #[arg(long)]
        mask_image: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Zero the unobserved entries of a tensor.
    ApplyMask {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        mask: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Recover a tensor from its observed entries.
    Complete {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        mask: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Denoiser noise level; defaults to sqrt(lambda / beta).
        #[arg(long)]
        sigma: Option<f64>,
        /// `none`, `tv`, or `external:<command line>`.
        #[arg(long, default_value = "none")]
        denoiser: String,
        #[arg(long, default_value_t = 30)]
        tv_iterations: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// Keep the raw iterate instead of clamping to [0, 1].
        #[arg(long)]
        no_clip: bool,
        /// Write the convergence trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare a recovered tensor with the ground truth.
    Metrics {
        #[arg(short = 'a', long)]
        estimate: PathBuf,
        #[arg(short = 'b', long)]
        reference: PathBuf,
        /// Also print per-slice PSNR and SSIM.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Grid search over beta and lambda, one CSV row per pair.
    Sweep {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        mask: PathBuf,
        #[arg(short, long)]
        truth: PathBuf,
        #[arg(long, default_value = "tv")]
        denoiser: String,
        /// Comma-separated beta values (default: the full candidate grid).
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        /// Comma-separated lambda values (default: the full candidate grid).
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report tubal rank and multi-rank.
    Tsvd {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        print_ranks: bool,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
    },
    /// Convert a PNG, or a directory of PNG frames, to a tensor file.
    Import {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a tensor as a PNG (1 or 3 slices) or a directory of frames.
    Export {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskKind {
    Elementwise,
    Tubal,
    Bayer,
    Image,
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad dimension `{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [n1, n2, n3] => Dims::new(*n1, *n2, *n3).map_err(|e| e.to_string()),
        _ => Err(format!("expected n1,n2,n3, got `{s}`")),
    }
}

/// Bad flag values found after clap parsing; reported with exit code 1.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn parse_denoiser(s: &str, tv_iterations: usize) -> Result<DenoiserSpec> {
    let mut spec = match s {
        "none" | "identity" => DenoiserSpec::identity(),
        "tv" => DenoiserSpec::tv(),
        _ => match s.strip_prefix("external:") {
            Some(cmd) => DenoiserSpec::external(cmd.split_whitespace()),
            None => {
                return Err(UsageError(format!(
                    "unknown denoiser `{s}` (expected none, tv, or external:<cmd>)"
                ))
                .into())
            }
        },
    };
    spec.tv_iterations = tv_iterations;
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(spec)
}

/// Full-precision rendering; `inf` for exact reconstructions.
fn fmt_value(v: f64) -> String {
    format!("{v:?}")
}

fn synth(dims: Dims, rank: usize, seed: u64) -> Result<Tensor3> {
    if rank == 0 {
        bail!("tubal rank must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Dims { n1, n2, n3 } = dims;
    let a = Tensor3::from_fn(n1, rank, n3, |_, _, _| rng.random::<f64>())?;
    let b = Tensor3::from_fn(rank, n2, n3, |_, _, _| rng.random::<f64>())?;
    // Each entry sums rank * n3 products of values in [0, 1).
    Ok(t_product(&a, &b)?.scale(1.0 / (rank * n3) as f64))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            dims,
            tubal_rank,
            seed,
            output,
        } => save_tensor(&output, &synth(dims, tubal_rank, seed)?)?,

        Command::Mask {
            kind,
            rate,
            seed,
            dims,
            mask_image,
            output,
        } => {
            let kind = match kind {
                MaskKind::Elementwise => SamplingKind::Elementwise,
                MaskKind::Tubal => SamplingKind::Tubal,
                MaskKind::Bayer => SamplingKind::Bayer,
                MaskKind::Image => SamplingKind::MaskImage,
            };
            let spec = SamplingSpec {
                kind,
                rate,
                seed,
                mask_path: mask_image,
            };
            let mask = gen_mask(&spec, dims)?;
            save_mask(&output, &mask)?;
            eprintln!(
                "observed {} of {} entries ({:.4})",
                mask.observed_count(),
                dims.len(),
                mask.sampling_rate()
            );
        }

        Command::ApplyMask {
            input,
            mask,
            output,
        } => {
            let x = load_tensor(&input)?;
            let m = load_mask(&mask)?;
            save_tensor(&output, &m.apply(&x)?)?;
        }

        Command::Complete {
            input,
            mask,
            beta,
            lambda,
            sigma,
            denoiser,
            tv_iterations,
            tol,
            max_iter,
            no_clip,
            trace,
            output,
        } => {
            let o = load_tensor(&input)?;
            let m = load_mask(&mask)?;
            let cfg = SolverConfig {
                beta,
                lambda,
                sigma_override: sigma,
                tol,
                max_iter,
                denoiser: parse_denoiser(&denoiser, tv_iterations)?,
                clip_output: !no_clip,
                trace_every: 1,
            };
            let (x, tr) = complete(&o, &m, &cfg)?;
            save_tensor(&output, &x)?;
            if let Some(path) = trace {
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                tr.write_csv(BufWriter::new(f))?;
            }
            eprintln!(
                "{} after {} iterations, final relcha {:e}",
                if tr.converged { "converged" } else { "stopped" },
                tr.iterations,
                tr.final_relcha().unwrap_or(f64::NAN)
            );
        }

        Command::Metrics {
            estimate,
            reference,
            verbose,
        } => {
            let a = load_tensor(&estimate)?;
            let b = load_tensor(&reference)?;
            println!(
                "psnr={} ssim={} rse={}",
                fmt_value(psnr(&a, &b)?),
                fmt_value(ssim(&a, &b)?),
                fmt_value(rel_error(&a, &b)?)
            );
            if verbose {
                let p = psnr_per_slice(&a, &b)?;
                let s = ssim_per_slice(&a, &b)?;
                for (k, (p, s)) in p.iter().zip(&s).enumerate() {
                    println!("slice={k} psnr={} ssim={}", fmt_value(*p), fmt_value(*s));
                }
            }
        }

        Command::Sweep {
            input,
            mask,
            truth,
            denoiser,
            betas,
            lambdas,
            tol,
            max_iter,
            output,
        } => {
            let o = load_tensor(&input)?;
            let m = load_mask(&mask)?;
            let t = load_tensor(&truth)?;
            let spec = parse_denoiser(&denoiser, 30)?;
            let betas = betas.unwrap_or_else(|| PARAMETER_GRID.to_vec());
            let lambdas = lambdas.unwrap_or_else(|| PARAMETER_GRID.to_vec());
            let mut out: Box<dyn Write> = match &output {
                Some(p) => Box::new(BufWriter::new(File::create(p)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            writeln!(out, "beta,lambda,psnr,ssim")?;
            for &beta in &betas {
                for &lambda in &lambdas {
                    let cfg = SolverConfig {
                        beta,
                        lambda,
                        tol,
                        max_iter,
                        denoiser: spec.clone(),
                        ..SolverConfig::default()
                    };
                    let (x, _) = complete(&o, &m, &cfg)?;
                    writeln!(
                        out,
                        "{beta:e},{lambda:e},{},{}",
                        fmt_value(psnr(&x, &t)?),
                        fmt_value(ssim(&x, &t)?)
                    )?;
                }
            }
            out.flush()?;
        }

        Command::Tsvd {
            input,
            print_ranks,
            tol,
        } => {
            let x = load_tensor(&input)?;
            let tr = tubal_rank(&x, tol)?;
            let mr = multi_rank(&x, tol)?;
            println!("dims={}", x.dims());
            if print_ranks {
                println!("tubal_rank={tr}");
                let list: Vec<String> = mr.iter().map(|r| r.to_string()).collect();
                println!("multi_rank={}", list.join(","));
            }
        }

        Command::Import { input, output } => {
            let t = load_image_stack(&input)?;
            save_tensor(&output, &t)?;
            eprintln!("imported {} as {}", input.display(), t.dims());
        }

        Command::Export { input, output } => {
            save_image_stack(&load_tensor(&input)?, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
