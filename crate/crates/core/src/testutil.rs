use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::Tensor3;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal entries.
pub(crate) fn random_tensor(n1: usize, n2: usize, n3: usize, seed: u64) -> Tensor3 {
    let mut r = rng(seed);
    Tensor3::from_fn(n1, n2, n3, |_, _, _| StandardNormal.sample(&mut r)).unwrap()
}

pub(crate) fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
